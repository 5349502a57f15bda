#include "swirseg/fusion.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include <json.hpp>

#include "swirseg/error.h"

namespace swirseg {
namespace {

// Sliding minimum over [i - radius, i + radius] clipped to the sequence.
void sliding_min(std::span<const float> in, std::span<float> out, std::size_t radius) {
  const std::size_t n = in.size();
  std::deque<std::size_t> window;  // indices with increasing values
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t hi = std::min(n - 1, i + radius);
    for (; next <= hi; ++next) {
      while (!window.empty() && in[window.back()] >= in[next]) window.pop_back();
      window.push_back(next);
    }
    const std::size_t lo = i >= radius ? i - radius : 0;
    while (window.front() < lo) window.pop_front();
    out[i] = in[window.front()];
  }
}

}  // namespace

double FusedScene::invalid_fraction() const {
  if (valid.empty()) return 0.0;
  const auto bad = std::count(valid.begin(), valid.end(), std::uint8_t{0});
  return static_cast<double>(bad) / static_cast<double>(valid.size());
}

std::vector<float> height_above_ground(const DemGrid& dem, double window_m) {
  dem.validate();
  std::size_t side = static_cast<std::size_t>(std::max(3.0, std::round(window_m / dem.pixel_size)));
  if (side % 2 == 0) ++side;
  const std::size_t radius = side / 2;

  const std::size_t w = dem.width;
  const std::size_t h = dem.height;
  std::vector<float> rows(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    sliding_min(std::span<const float>(dem.elevations).subspan(y * w, w),
                std::span<float>(rows).subspan(y * w, w), radius);
  }
  std::vector<float> ground(w * h);
  std::vector<float> column(h), column_min(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) column[y] = rows[y * w + x];
    sliding_min(column, column_min, radius);
    for (std::size_t y = 0; y < h; ++y) ground[y * w + x] = column_min[y];
  }
  std::vector<float> out(w * h);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0f, dem.elevations[i] - ground[i]);
  return out;
}

bool sample_bilinear(std::span<const float> grid, std::size_t width, std::size_t height, double x,
                     double y, float& out) {
  constexpr double kSlack = 1e-9;
  const double max_x = static_cast<double>(width) - 1.0;
  const double max_y = static_cast<double>(height) - 1.0;
  if (!(x >= -kSlack && y >= -kSlack && x <= max_x + kSlack && y <= max_y + kSlack)) return false;
  x = std::clamp(x, 0.0, max_x);
  y = std::clamp(y, 0.0, max_y);
  const auto x0 = static_cast<std::size_t>(x);
  const auto y0 = static_cast<std::size_t>(y);
  const std::size_t x1 = std::min(x0 + 1, width - 1);
  const std::size_t y1 = std::min(y0 + 1, height - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double top = (1 - fx) * grid[y0 * width + x0] + fx * grid[y0 * width + x1];
  const double bottom = (1 - fx) * grid[y1 * width + x0] + fx * grid[y1 * width + x1];
  out = static_cast<float>((1 - fy) * top + fy * bottom);
  return true;
}

FusedScene associate_voxels(const WetnessMap& wetness, std::span<const ColumnModel> models,
                            const DemGrid& dem, const FusionOptions& options) {
  dem.validate();
  const std::vector<float> hag = options.normalize_height
                                     ? height_above_ground(dem, options.ground_window_m)
                                     : dem.elevations;
  FusedScene fused;
  fused.width = wetness.width;
  fused.height = wetness.height;
  const std::size_t n = fused.size();
  fused.elevation.assign(n, 0.0f);
  fused.height_above_ground.assign(n, 0.0f);
  fused.wetness = wetness.ratios;
  fused.wetness_valid = wetness.valid;
  fused.valid.assign(n, 0);

  for (const ColumnModel& cm : models) {
    const std::size_t end = std::min(cm.col_end, fused.width);
    for (std::size_t row = 0; row < fused.height; ++row) {
      for (std::size_t col = cm.col_begin; col < end; ++col) {
        Point2 p;
        if (!cm.model.apply({static_cast<double>(col), static_cast<double>(row)}, p)) continue;
        const std::size_t i = row * fused.width + col;
        float elev = 0.0f, above = 0.0f;
        if (!sample_bilinear(dem.elevations, dem.width, dem.height, p.x, p.y, elev)) continue;
        sample_bilinear(hag, dem.width, dem.height, p.x, p.y, above);
        fused.elevation[i] = elev;
        fused.height_above_ground[i] = above;
        fused.valid[i] = 1;
      }
    }
  }
  return fused;
}

FusedScene associate_voxels(const HyperCube& cube, const HomographyModel& model, const DemGrid& dem,
                            const FusionOptions& options) {
  const WetnessMap wetness = wetness_map(cube, options.wetness);
  const ColumnModel whole{0, cube.samples(), model};
  return associate_voxels(wetness, std::span<const ColumnModel>(&whole, 1), dem, options);
}

std::string_view label_name(SegmentLabel label) {
  switch (label) {
    case SegmentLabel::kRoadOther: return "RoadOther";
    case SegmentLabel::kGrass: return "Grass";
    case SegmentLabel::kTree: return "Tree";
    case SegmentLabel::kHouse: return "House";
    case SegmentLabel::kBuilding: return "Building";
    case SegmentLabel::kInvalid: return "Invalid";
  }
  return "Unknown";
}

void RuleThresholds::validate() const {
  if (!(elev_low > 0.0 && elev_low <= elev_high)) {
    throw ValidationError("elevation thresholds must satisfy 0 < elev_low <= elev_high");
  }
  if (!(canopy >= 0.0)) throw ValidationError("canopy threshold must be non-negative");
  if (!std::isfinite(wet_threshold)) throw ValidationError("wetness threshold must be finite");
}

SegmentLabel classify_pixel(double wetness, bool wetness_valid, double height,
                            const RuleThresholds& t) {
  if (wetness_valid && wetness >= t.wet_threshold) {
    return height >= t.canopy ? SegmentLabel::kTree : SegmentLabel::kGrass;
  }
  if (height >= t.elev_high) return SegmentLabel::kBuilding;
  if (height >= t.elev_low) return SegmentLabel::kHouse;
  return SegmentLabel::kRoadOther;
}

SegmentMap classify(const FusedScene& fused, const RuleThresholds& t) {
  t.validate();
  SegmentMap map;
  map.width = fused.width;
  map.height = fused.height;
  map.labels.resize(fused.size());
  for (std::size_t i = 0; i < fused.size(); ++i) {
    map.labels[i] = fused.valid[i] ? classify_pixel(fused.wetness[i], fused.wetness_valid[i] != 0,
                                                    fused.height_above_ground[i], t)
                                   : SegmentLabel::kInvalid;
  }
  return map;
}

Rgb label_color(SegmentLabel label) {
  switch (label) {
    case SegmentLabel::kBuilding: return {255, 0, 0};
    case SegmentLabel::kHouse: return {255, 255, 255};
    case SegmentLabel::kTree: return {255, 255, 0};
    case SegmentLabel::kGrass: return {0, 255, 0};
    case SegmentLabel::kRoadOther: return {0, 0, 0};
    case SegmentLabel::kInvalid: return {255, 0, 255};
  }
  return {255, 0, 255};
}

RgbImage render_segmap(const SegmentMap& map) {
  RgbImage img{map.width, map.height, std::vector<std::uint8_t>(3 * map.labels.size())};
  for (std::size_t i = 0; i < map.labels.size(); ++i) {
    const Rgb c = label_color(map.labels[i]);
    img.rgb[3 * i] = c.r;
    img.rgb[3 * i + 1] = c.g;
    img.rgb[3 * i + 2] = c.b;
  }
  return img;
}

RgbImage render_wetness(const WetnessMap& map) {
  RgbImage img{map.width, map.height, std::vector<std::uint8_t>(3 * map.ratios.size())};
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < map.ratios.size(); ++i) {
    if (!map.valid[i]) continue;
    lo = any ? std::min(lo, static_cast<double>(map.ratios[i])) : map.ratios[i];
    hi = any ? std::max(hi, static_cast<double>(map.ratios[i])) : map.ratios[i];
    any = true;
  }
  const double range = hi - lo;
  auto channel = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  for (std::size_t i = 0; i < map.ratios.size(); ++i) {
    std::uint8_t* px = &img.rgb[3 * i];
    if (!map.valid[i]) {
      px[0] = 255, px[1] = 0, px[2] = 255;
      continue;
    }
    // t = 1 wettest, 0 driest; black -> red -> yellow -> white in thirds.
    const double t = range > 0.0 ? (map.ratios[i] - lo) / range : 0.5;
    px[0] = channel(3.0 * t);
    px[1] = channel(3.0 * t - 1.0);
    px[2] = channel(3.0 * t - 2.0);
  }
  return img;
}

void write_segmap(const SegmentMap& map, const std::filesystem::path& pgm_path) {
  LabelImage codes{map.width, map.height, std::vector<std::uint8_t>(map.labels.size())};
  for (std::size_t i = 0; i < map.labels.size(); ++i) codes.codes[i] = static_cast<std::uint8_t>(map.labels[i]);
  write_pgm_codes(codes, pgm_path);
  nlohmann::ordered_json legend;
  for (SegmentLabel l : {SegmentLabel::kRoadOther, SegmentLabel::kGrass, SegmentLabel::kTree,
                         SegmentLabel::kHouse, SegmentLabel::kBuilding, SegmentLabel::kInvalid}) {
    legend[std::to_string(static_cast<int>(l))] = label_name(l);
  }
  std::ofstream out(std::filesystem::path(pgm_path).replace_extension(".json"));
  if (!out) throw InputError("cannot write segmentation legend for " + pgm_path.string());
  out << legend.dump(2) << "\n";
}

SegmentMap read_segmap(const std::filesystem::path& pgm_path) {
  const LabelImage codes = read_pgm_codes(pgm_path);
  SegmentMap map;
  map.width = codes.width;
  map.height = codes.height;
  map.labels.resize(codes.codes.size());
  for (std::size_t i = 0; i < codes.codes.size(); ++i) {
    const std::uint8_t c = codes.codes[i];
    if (c > 4 && c != 255) throw InputError(pgm_path.string() + ": unknown label code " + std::to_string(c));
    map.labels[i] = static_cast<SegmentLabel>(c);
  }
  return map;
}

namespace {

void write_float_grid(const std::vector<float>& v, std::size_t w, std::size_t h,
                      const std::filesystem::path& path) {
  DemGrid g;
  g.width = w;
  g.height = h;
  g.elevations = v;
  write_dem(g, path);
}

std::vector<float> read_float_grid(const std::filesystem::path& path, std::size_t w, std::size_t h) {
  DemGrid g = read_dem(path);
  if (g.width != w || g.height != h) throw InputError(path.string() + ": grid size mismatch");
  return std::move(g.elevations);
}

std::vector<std::uint8_t> read_mask(const std::filesystem::path& path, std::size_t w, std::size_t h) {
  LabelImage m = read_pgm_codes(path);
  if (m.width != w || m.height != h) throw InputError(path.string() + ": mask size mismatch");
  for (auto c : m.codes) {
    if (c > 1) throw InputError(path.string() + ": mask codes must be 0 or 1");
  }
  return std::move(m.codes);
}

}  // namespace

void write_fused(const FusedScene& fused, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_float_grid(fused.elevation, fused.width, fused.height, dir / "elevation.raw");
  write_float_grid(fused.height_above_ground, fused.width, fused.height, dir / "height_above_ground.raw");
  write_float_grid(fused.wetness, fused.width, fused.height, dir / "wetness.raw");
  write_pgm_codes({fused.width, fused.height, fused.valid}, dir / "valid.pgm");
  write_pgm_codes({fused.width, fused.height, fused.wetness_valid}, dir / "wetness_valid.pgm");
}

FusedScene read_fused(const std::filesystem::path& dir) {
  const LabelImage valid = read_pgm_codes(dir / "valid.pgm");
  FusedScene f;
  f.width = valid.width;
  f.height = valid.height;
  f.valid = read_mask(dir / "valid.pgm", f.width, f.height);
  f.wetness_valid = read_mask(dir / "wetness_valid.pgm", f.width, f.height);
  f.elevation = read_float_grid(dir / "elevation.raw", f.width, f.height);
  f.height_above_ground = read_float_grid(dir / "height_above_ground.raw", f.width, f.height);
  f.wetness = read_float_grid(dir / "wetness.raw", f.width, f.height);
  return f;
}

}  // namespace swirseg
