#include "swirseg/synth_scene.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>

#include "swirseg/error.h"
#include "swirseg/random.h"
#include "swirseg/raster_io.h"

namespace swirseg {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kVehicleHeight = 1.5;

// Albedo multiplier per material on top of its spectral template.
double material_gain(Material m) {
  switch (m) {
    case Material::kGrass: return 0.9;
    case Material::kTree: return 0.55;
    case Material::kRoad: return 0.35;
    case Material::kParking: return 0.8;
    case Material::kHouseRoof: return 2.6;
    case Material::kBuildingRoof: return 2.0;
    case Material::kVehicle: return 1.0;
  }
  return 1.0;
}

double notch(double wl, double center) {
  const double z = (wl - center) / 0.04;
  return 1.0 - 0.7 * std::exp(-0.5 * z * z);
}

double uniform_in(Rng& rng, const Range& r) { return r.lo + (r.hi - r.lo) * uniform_unit(rng); }

// Two-octave value noise on the ortho pixel lattice, zero mean, in [-1, 1].
class ValueNoise {
 public:
  ValueNoise(std::size_t extent, Rng& rng) {
    for (std::size_t o = 0; o < kOctaves; ++o) {
      const std::size_t n = extent / kPeriods[o] + 3;
      side_[o] = n;
      lattice_[o].resize(n * n);
      for (float& v : lattice_[o]) v = static_cast<float>(2.0 * uniform_unit(rng) - 1.0);
    }
  }

  double operator()(double x, double y) const {
    return kWeights[0] * octave(0, x, y) + kWeights[1] * octave(1, x, y);
  }

 private:
  static constexpr std::size_t kOctaves = 2;
  static constexpr std::size_t kPeriods[kOctaves] = {8, 4};
  static constexpr double kWeights[kOctaves] = {0.65, 0.35};

  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

  double octave(std::size_t o, double x, double y) const {
    const double p = static_cast<double>(kPeriods[o]);
    const double gx = std::clamp(x / p + 1.0, 0.0, static_cast<double>(side_[o] - 2));
    const double gy = std::clamp(y / p + 1.0, 0.0, static_cast<double>(side_[o] - 2));
    const auto ix = static_cast<std::size_t>(gx);
    const auto iy = static_cast<std::size_t>(gy);
    const double fx = smooth(gx - static_cast<double>(ix));
    const double fy = smooth(gy - static_cast<double>(iy));
    const std::size_t n = side_[o];
    const auto& l = lattice_[o];
    const double top = (1 - fx) * l[iy * n + ix] + fx * l[iy * n + ix + 1];
    const double bottom = (1 - fx) * l[(iy + 1) * n + ix] + fx * l[(iy + 1) * n + ix + 1];
    return (1 - fy) * top + fy * bottom;
  }

  std::size_t side_[kOctaves]{};
  std::vector<float> lattice_[kOctaves];
};

struct WorldRaster {
  std::size_t size = 0;
  std::vector<Material> material;
  std::vector<float> height;  // above ground
  std::vector<float> gain;    // per-instance albedo gain
};

struct Rect {
  std::size_t x0, y0, x1, y1;  // half-open
};

class BlockPlanner {
 public:
  BlockPlanner(WorldRaster& world, Rect block, Rng& rng) : world_(world), block_(block), rng_(rng) {
    occupied_.assign((block.x1 - block.x0) * (block.y1 - block.y0), 0);
  }

  // Returns the placed footprint in world pixels.
  std::optional<Rect> place_rect(Material m, const Range& side_w, const Range& side_h,
                                 const Range& height) {
    const auto w = static_cast<std::size_t>(std::lround(uniform_in(rng_, side_w)));
    const auto h = static_cast<std::size_t>(std::lround(uniform_in(rng_, side_h)));
    const double z = uniform_in(rng_, height);
    const double g = 0.85 + 0.3 * uniform_unit(rng_);
    for (int attempt = 0; attempt < 30; ++attempt) {
      std::size_t x, y;
      if (!draw_origin(w, h, x, y)) return std::nullopt;
      if (!free(x, y, w, h, [](std::size_t, std::size_t) { return true; })) continue;
      stamp(x, y, w, h, m, z, g, [](std::size_t, std::size_t) { return true; });
      return Rect{block_.x0 + x, block_.y0 + y, block_.x0 + x + w, block_.y0 + y + h};
    }
    return std::nullopt;
  }

  void place_disk(Material m, const Range& radius, const Range& height) {
    const double r = uniform_in(rng_, radius);
    const double z = uniform_in(rng_, height);
    const double g = 0.85 + 0.3 * uniform_unit(rng_);
    const auto d = static_cast<std::size_t>(2.0 * std::floor(r) + 1.0);
    const double c = std::floor(r);
    auto inside = [r, c](std::size_t i, std::size_t j) {
      const double dx = static_cast<double>(i) - c;
      const double dy = static_cast<double>(j) - c;
      return dx * dx + dy * dy <= r * r;
    };
    for (int attempt = 0; attempt < 30; ++attempt) {
      std::size_t x, y;
      if (!draw_origin(d, d, x, y)) return;
      if (!free(x, y, d, d, inside)) continue;
      stamp(x, y, d, d, m, z, g, inside);
      return;
    }
  }

 private:
  bool draw_origin(std::size_t w, std::size_t h, std::size_t& x, std::size_t& y) {
    const std::size_t bw = block_.x1 - block_.x0;
    const std::size_t bh = block_.y1 - block_.y0;
    if (w + 2 > bw || h + 2 > bh) return false;
    x = 1 + uniform_index(rng_, bw - w - 1);
    y = 1 + uniform_index(rng_, bh - h - 1);
    return true;
  }

  // One-pixel clearance around every placed footprint.
  template <typename Shape>
  bool free(std::size_t x, std::size_t y, std::size_t w, std::size_t h, Shape inside) const {
    const std::size_t bw = block_.x1 - block_.x0;
    for (std::size_t j = 0; j < h; ++j) {
      for (std::size_t i = 0; i < w; ++i) {
        if (!inside(i, j)) continue;
        for (std::size_t yy = y + j - 1; yy <= y + j + 1; ++yy) {
          for (std::size_t xx = x + i - 1; xx <= x + i + 1; ++xx) {
            if (occupied_[yy * bw + xx]) return false;
          }
        }
      }
    }
    return true;
  }

  template <typename Shape>
  void stamp(std::size_t x, std::size_t y, std::size_t w, std::size_t h, Material m, double z,
             double g, Shape inside) {
    const std::size_t bw = block_.x1 - block_.x0;
    for (std::size_t j = 0; j < h; ++j) {
      for (std::size_t i = 0; i < w; ++i) {
        if (!inside(i, j)) continue;
        occupied_[(y + j) * bw + (x + i)] = 1;
        const std::size_t k = (block_.y0 + y + j) * world_.size + (block_.x0 + x + i);
        world_.material[k] = m;
        world_.height[k] = static_cast<float>(z);
        world_.gain[k] = static_cast<float>(g);
      }
    }
  }

  WorldRaster& world_;
  Rect block_;
  Rng& rng_;
  std::vector<std::uint8_t> occupied_;
};

// Small rectangles (vehicles, rooftop units) scattered over pixels of a host
// material inside `area`, kept one pixel apart from each other and from the
// host's boundary.
struct DetailSpec {
  Material host;
  Material material;
  std::size_t short_side;
  std::size_t long_side;
  Range gain;
  // Height above ground; negative keeps the host's height.
  double height;
};

void scatter_details(WorldRaster& world, std::vector<std::uint8_t>& taken, const Rect& area,
                     std::size_t count, const DetailSpec& spec, Rng& rng) {
  const std::size_t n = world.size;
  for (std::size_t i = 0; i < count; ++i) {
    const bool tall = uniform_unit(rng) < 0.5;
    const std::size_t w = tall ? spec.short_side : spec.long_side;
    const std::size_t h = tall ? spec.long_side : spec.short_side;
    const double g = uniform_in(rng, spec.gain);
    if (area.x1 - area.x0 < w + 2 || area.y1 - area.y0 < h + 2) continue;
    for (int attempt = 0; attempt < 20; ++attempt) {
      const std::size_t x = area.x0 + 1 + uniform_index(rng, area.x1 - area.x0 - w - 1);
      const std::size_t y = area.y0 + 1 + uniform_index(rng, area.y1 - area.y0 - h - 1);
      bool ok = true;
      for (std::size_t yy = y - 1; ok && yy <= y + h; ++yy) {
        for (std::size_t xx = x - 1; ok && xx <= x + w; ++xx) {
          const std::size_t k = yy * n + xx;
          ok = world.material[k] == spec.host && !taken[k];
        }
      }
      if (!ok) continue;
      const float z = spec.height < 0.0 ? world.height[y * n + x] : static_cast<float>(spec.height);
      for (std::size_t yy = y; yy < y + h; ++yy) {
        for (std::size_t xx = x; xx < x + w; ++xx) {
          const std::size_t k = yy * n + xx;
          taken[k] = 1;
          world.material[k] = spec.material;
          world.height[k] = z;
          world.gain[k] = static_cast<float>(g);
        }
      }
      break;
    }
  }
}

WorldRaster build_world(const SceneConfig& c, Rng& rng) {
  WorldRaster world;
  const std::size_t n = c.ortho_size;
  world.size = n;
  world.material.assign(n * n, Material::kGrass);
  world.height.assign(n * n, 0.0f);
  world.gain.assign(n * n, 1.0f);

  const std::size_t phase_x = uniform_index(rng, c.block_pitch);
  const std::size_t phase_y = uniform_index(rng, c.block_pitch);
  auto on_road = [&](std::size_t v, std::size_t phase) {
    return (v + phase) % c.block_pitch < c.road_width;
  };
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      if (on_road(x, phase_x) || on_road(y, phase_y)) world.material[y * n + x] = Material::kRoad;
    }
  }

  // Block interiors: maximal runs of non-road coordinates along each axis.
  auto interiors = [&](std::size_t phase) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t v = 0;
    while (v < n) {
      while (v < n && on_road(v, phase)) ++v;
      const std::size_t start = v;
      while (v < n && !on_road(v, phase)) ++v;
      if (v > start) runs.emplace_back(start, v);
    }
    return runs;
  };
  const auto cols = interiors(phase_x);
  const auto rows = interiors(phase_y);
  std::vector<Rect> buildings, lots;
  for (const auto& [y0, y1] : rows) {
    for (const auto& [x0, x1] : cols) {
      const Rect block{x0, y0, x1, y1};
      const float yard_gain = static_cast<float>(0.85 + 0.3 * uniform_unit(rng));
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) world.gain[y * n + x] = yard_gain;
      }
      BlockPlanner planner(world, block, rng);
      const Range flat{0.0, 0.0};
      for (std::size_t i = 0; i < c.buildings_per_block; ++i) {
        if (auto r = planner.place_rect(Material::kBuildingRoof, c.building_side, c.building_side,
                                        c.building_height)) {
          buildings.push_back(*r);
        }
      }
      for (std::size_t i = 0; i < c.parking_per_block; ++i) {
        if (auto r = planner.place_rect(Material::kParking, Range{10.0, 16.0}, Range{8.0, 12.0}, flat)) {
          lots.push_back(*r);
        }
      }
      for (std::size_t i = 0; i < c.houses_per_block; ++i) {
        planner.place_rect(Material::kHouseRoof, c.house_side, c.house_side, c.house_height);
      }
      for (std::size_t i = 0; i < c.trees_per_block; ++i) {
        planner.place_disk(Material::kTree, c.tree_radius, c.tree_height);
      }
    }
  }

  std::vector<std::uint8_t> taken(n * n, 0);
  const DetailSpec roof_unit{Material::kBuildingRoof, Material::kBuildingRoof, 2, 3, Range{0.3, 0.6}, -1.0};
  for (const Rect& r : buildings) scatter_details(world, taken, r, c.roof_units_per_building, roof_unit, rng);
  const DetailSpec parked{Material::kParking, Material::kVehicle, 2, 4, Range{1.5, 3.5}, kVehicleHeight};
  for (const Rect& r : lots) scatter_details(world, taken, r, c.vehicles_per_lot, parked, rng);
  const DetailSpec driving{Material::kRoad, Material::kVehicle, 2, 4, Range{1.5, 3.5}, kVehicleHeight};
  const std::size_t road_vehicles = c.road_vehicles_per_block * rows.size() * cols.size();
  scatter_details(world, taken, Rect{0, 0, n, n}, road_vehicles, driving, rng);
  return world;
}

HomographyModel footprint_transform(const SceneConfig& c, Rng& rng) {
  const double theta = c.rotation_deg * kPi / 180.0;
  const double cs = c.scale * std::cos(theta);
  const double sn = c.scale * std::sin(theta);
  const double hw = 0.5 * static_cast<double>(c.swir_width - 1);
  const double hh = 0.5 * static_cast<double>(c.swir_height - 1);
  const double last = static_cast<double>(c.ortho_size - 1);

  double cx, cy;
  if (c.random_offset) {
    const double ex = std::abs(cs) * hw + std::abs(sn) * hh;
    const double ey = std::abs(sn) * hw + std::abs(cs) * hh;
    const double room_x = std::floor(last - 2.0 * ex);
    const double room_y = std::floor(last - 2.0 * ey);
    if (room_x < 0.0 || room_y < 0.0) throw ValidationError("SWIR footprint does not fit inside the ortho");
    cx = ex + static_cast<double>(uniform_index(rng, static_cast<std::size_t>(room_x) + 1));
    cy = ey + static_cast<double>(uniform_index(rng, static_cast<std::size_t>(room_y) + 1));
  } else {
    cx = c.offset_x + cs * hw - sn * hh;
    cy = c.offset_y + sn * hw + cs * hh;
  }
  // p_ortho = center + s R (q - q_center)
  HomographyModel h{{cs, -sn, cx - (cs * hw - sn * hh), sn, cs, cy - (sn * hw + cs * hh), 0, 0, 1}};
  const std::array<Point2, 4> corners{{{0, 0}, {2 * hw, 0}, {0, 2 * hh}, {2 * hw, 2 * hh}}};
  for (const Point2& q : corners) {
    Point2 p;
    h.apply(q, p);
    if (p.x < -1e-9 || p.y < -1e-9 || p.x > last + 1e-9 || p.y > last + 1e-9) {
      throw ValidationError("SWIR footprint does not fit inside the ortho");
    }
  }
  return h;
}

void check_range(const Range& r, const char* name, bool allow_zero) {
  const bool ok = std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi &&
                  (allow_zero ? r.lo >= 0.0 : r.lo > 0.0);
  if (!ok) throw ValidationError(std::string(name) + " must be a non-empty positive range");
}

}  // namespace

void SceneConfig::validate() const {
  if (swir_width < 64 || swir_height < 32) {
    throw ValidationError("SWIR footprint must be at least 64x32 pixels");
  }
  if (ortho_size < std::max(swir_width, swir_height)) {
    throw ValidationError("ortho must be at least as large as the SWIR footprint");
  }
  if (bands < 8) throw ValidationError("at least 8 bands are required");
  if (!(wavelength_min_um > 0.0 && wavelength_min_um < 1.5 && wavelength_max_um > 2.35)) {
    throw ValidationError("wavelength range must cover both wetness windows");
  }
  if (!(pixel_size_m > 0.0)) throw ValidationError("pixel_size_m must be positive");
  if (road_width == 0 || block_pitch <= road_width + 4) {
    throw ValidationError("block_pitch must exceed road_width by more than 4 pixels");
  }
  check_range(building_height, "building_height", false);
  check_range(house_height, "house_height", false);
  check_range(tree_height, "tree_height", false);
  check_range(building_side, "building_side", false);
  check_range(house_side, "house_side", false);
  check_range(tree_radius, "tree_radius", false);
  if (!(spectral_noise >= 0.0)) throw ValidationError("spectral_noise must be non-negative");
  if (!(texture_amplitude >= 0.0 && texture_amplitude < 0.5)) {
    throw ValidationError("texture_amplitude must lie in [0, 0.5)");
  }
  if (!(scale > 0.0) || !std::isfinite(rotation_deg)) {
    throw ValidationError("footprint scale must be positive and rotation finite");
  }
}

std::string_view material_name(Material m) {
  switch (m) {
    case Material::kGrass: return "grass";
    case Material::kTree: return "tree";
    case Material::kRoad: return "road";
    case Material::kParking: return "parking";
    case Material::kHouseRoof: return "house_roof";
    case Material::kBuildingRoof: return "building_roof";
    case Material::kVehicle: return "vehicle";
  }
  return "unknown";
}

bool is_vegetation(Material m) { return m == Material::kGrass || m == Material::kTree; }

double canonical_reflectance(Material m, double wl) {
  double base;
  if (is_vegetation(m)) {
    if (wl <= 1.8) {
      base = 0.4;
    } else if (wl >= 2.0) {
      base = 0.15;
    } else {
      base = 0.4 - 0.25 * (wl - 1.8) / 0.2;
    }
  } else {
    base = 0.2 + 0.15 * std::clamp((wl - 0.9) / 1.6, 0.0, 1.0);
  }
  return material_gain(m) * base * notch(wl, 1.4) * notch(wl, 1.9);
}

SyntheticScene generate_scene(const SceneConfig& config) {
  config.validate();
  SyntheticScene scene;
  scene.config = config;

  Rng layout_rng(derive_seed(config.seed, 0));
  Rng texture_rng(derive_seed(config.seed, 1));
  Rng placement_rng(derive_seed(config.seed, 2));
  Rng noise_rng(derive_seed(config.seed, 3));

  const WorldRaster world = build_world(config, layout_rng);
  const ValueNoise noise(config.ortho_size, texture_rng);
  const std::size_t n = config.ortho_size;
  auto texture = [&](double x, double y) { return 1.0 + config.texture_amplitude * noise(x, y); };

  // Band centers evenly spaced over the configured range.
  std::vector<double> wavelengths(config.bands);
  for (std::size_t b = 0; b < config.bands; ++b) {
    wavelengths[b] = config.wavelength_min_um + (config.wavelength_max_um - config.wavelength_min_um) *
                                                    static_cast<double>(b) /
                                                    static_cast<double>(config.bands - 1);
  }
  constexpr double kOrthoWavelength = 1.2;

  scene.dem.width = n;
  scene.dem.height = n;
  scene.dem.pixel_size = config.pixel_size_m;
  scene.dem.origin_x = config.origin_x;
  scene.dem.origin_y = config.origin_y;
  scene.dem.elevations.resize(n * n);
  scene.ortho = GrayImage(n, n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t k = y * n + x;
      scene.dem.elevations[k] = static_cast<float>(config.ground_elevation_m + world.height[k]);
      const double v = canonical_reflectance(world.material[k], kOrthoWavelength) * world.gain[k] *
                       texture(static_cast<double>(x), static_cast<double>(y));
      scene.ortho.pixels[k] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }

  GroundTruth& truth = scene.truth;
  truth.transform = footprint_transform(config, placement_rng);
  for (std::size_t m = 0; m < kMaterialCount; ++m) {
    MaterialSpectrum s{static_cast<Material>(m), {}};
    for (double wl : wavelengths) s.reflectance.push_back(static_cast<float>(canonical_reflectance(s.material, wl)));
    truth.spectra.push_back(std::move(s));
  }

  const std::size_t lines = config.swir_height;
  const std::size_t samples = config.swir_width;
  const std::size_t bands = config.bands;
  std::vector<float> values(lines * samples * bands);
  truth.labels.width = samples;
  truth.labels.height = lines;
  truth.labels.labels.resize(lines * samples);
  truth.materials.resize(lines * samples);
  truth.height_above_ground.resize(lines * samples);
  RuleThresholds rules;  // defaults; wetness supplied as a clean wet/dry flag
  for (std::size_t l = 0; l < lines; ++l) {
    for (std::size_t s = 0; s < samples; ++s) {
      Point2 p;
      truth.transform.apply({static_cast<double>(s), static_cast<double>(l)}, p);
      const auto ox = static_cast<std::size_t>(std::clamp(std::lround(p.x), 0L, static_cast<long>(n - 1)));
      const auto oy = static_cast<std::size_t>(std::clamp(std::lround(p.y), 0L, static_cast<long>(n - 1)));
      const std::size_t k = oy * n + ox;
      const Material m = world.material[k];
      const double shade = world.gain[k] * texture(p.x, p.y);
      const std::size_t i = l * samples + s;
      truth.materials[i] = m;
      truth.height_above_ground[i] = world.height[k];
      truth.labels.labels[i] =
          classify_pixel(is_vegetation(m) ? 2.0 : 0.0, true, world.height[k], rules);
      const auto& spectrum = truth.spectra[static_cast<std::size_t>(m)].reflectance;
      for (std::size_t b = 0; b < bands; ++b) {
        values[(b * lines + l) * samples + s] =
            static_cast<float>(spectrum[b] * shade + config.spectral_noise * standard_normal(noise_rng));
      }
    }
  }
  scene.cube = HyperCube(lines, samples, std::move(wavelengths), std::move(values));
  return scene;
}

nlohmann::ordered_json scene_config_to_json(const SceneConfig& c) {
  auto range = [](const Range& r) { return nlohmann::ordered_json::array({r.lo, r.hi}); };
  return {{"ortho_size", c.ortho_size},
          {"swir_width", c.swir_width},
          {"swir_height", c.swir_height},
          {"bands", c.bands},
          {"wavelength_min_um", c.wavelength_min_um},
          {"wavelength_max_um", c.wavelength_max_um},
          {"pixel_size_m", c.pixel_size_m},
          {"origin_x", c.origin_x},
          {"origin_y", c.origin_y},
          {"ground_elevation_m", c.ground_elevation_m},
          {"block_pitch", c.block_pitch},
          {"road_width", c.road_width},
          {"buildings_per_block", c.buildings_per_block},
          {"houses_per_block", c.houses_per_block},
          {"trees_per_block", c.trees_per_block},
          {"parking_per_block", c.parking_per_block},
          {"vehicles_per_lot", c.vehicles_per_lot},
          {"road_vehicles_per_block", c.road_vehicles_per_block},
          {"roof_units_per_building", c.roof_units_per_building},
          {"building_height", range(c.building_height)},
          {"house_height", range(c.house_height)},
          {"tree_height", range(c.tree_height)},
          {"building_side", range(c.building_side)},
          {"house_side", range(c.house_side)},
          {"tree_radius", range(c.tree_radius)},
          {"spectral_noise", c.spectral_noise},
          {"texture_amplitude", c.texture_amplitude},
          {"random_offset", c.random_offset},
          {"offset_x", c.offset_x},
          {"offset_y", c.offset_y},
          {"rotation_deg", c.rotation_deg},
          {"scale", c.scale},
          {"seed", c.seed}};
}

SceneConfig scene_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("scene config must be a JSON object");
  SceneConfig c;
  const auto known = scene_config_to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ValidationError("unknown scene config key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    auto get_range = [&](const char* key, Range& r) {
      if (!j.contains(key)) return;
      const auto& a = j.at(key);
      if (!a.is_array() || a.size() != 2) throw ValidationError(std::string(key) + " must be [lo, hi]");
      r = {a[0].get<double>(), a[1].get<double>()};
    };
    get("ortho_size", c.ortho_size);
    get("swir_width", c.swir_width);
    get("swir_height", c.swir_height);
    get("bands", c.bands);
    get("wavelength_min_um", c.wavelength_min_um);
    get("wavelength_max_um", c.wavelength_max_um);
    get("pixel_size_m", c.pixel_size_m);
    get("origin_x", c.origin_x);
    get("origin_y", c.origin_y);
    get("ground_elevation_m", c.ground_elevation_m);
    get("block_pitch", c.block_pitch);
    get("road_width", c.road_width);
    get("buildings_per_block", c.buildings_per_block);
    get("houses_per_block", c.houses_per_block);
    get("trees_per_block", c.trees_per_block);
    get("parking_per_block", c.parking_per_block);
    get("vehicles_per_lot", c.vehicles_per_lot);
    get("road_vehicles_per_block", c.road_vehicles_per_block);
    get("roof_units_per_building", c.roof_units_per_building);
    get_range("building_height", c.building_height);
    get_range("house_height", c.house_height);
    get_range("tree_height", c.tree_height);
    get_range("building_side", c.building_side);
    get_range("house_side", c.house_side);
    get_range("tree_radius", c.tree_radius);
    get("spectral_noise", c.spectral_noise);
    get("texture_amplitude", c.texture_amplitude);
    get("random_offset", c.random_offset);
    get("offset_x", c.offset_x);
    get("offset_y", c.offset_y);
    get("rotation_deg", c.rotation_deg);
    get("scale", c.scale);
    get("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad scene config value: ") + e.what());
  }
  c.validate();
  return c;
}

void write_scene(const SyntheticScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_cube(scene.cube, dir / "cube.hdr");
  write_dem(scene.dem, dir / "dem.raw");
  write_pgm(scene.ortho, dir / "ortho.pgm");
  write_segmap(scene.truth.labels, dir / "truth_labels.pgm");

  nlohmann::ordered_json spectra = nlohmann::ordered_json::object();
  for (const auto& s : scene.truth.spectra) spectra[std::string(material_name(s.material))] = s.reflectance;
  const nlohmann::ordered_json truth = {{"transform", scene.truth.transform.m},
                                        {"transform_maps", "swir_pixel_to_dem_pixel"},
                                        {"config", scene_config_to_json(scene.config)},
                                        {"spectra", spectra}};
  std::ofstream out(dir / "truth.json");
  if (!out) throw InputError("cannot write " + (dir / "truth.json").string());
  out << truth.dump(2) << "\n";
}

HomographyModel read_truth_transform(const std::filesystem::path& truth_json) {
  std::ifstream in(truth_json);
  if (!in) throw InputError("cannot open " + truth_json.string());
  try {
    const auto j = nlohmann::json::parse(in);
    HomographyModel h;
    h.m = j.at("transform").get<std::array<double, 9>>();
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("garbled truth file " + truth_json.string() + ": " + e.what());
  }
}

}  // namespace swirseg
