#include "swirseg/correspondence.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <unordered_map>

#include <json.hpp>

#include "swirseg/error.h"
#include "swirseg/random.h"

namespace swirseg {

void SearchBudget::validate() const {
  if (max_correspondences < 1) throw ValidationError("max_correspondences must be >= 1");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("ratio must lie in (0, 1)");
}

std::vector<Correspondence> find_correspondences(std::span<const Descriptor> queries,
                                                 const Vocabulary& vocab, const PointCloud& cloud,
                                                 const SearchBudget& budget) {
  if (vocab.size() < 2) throw ValidationError("correspondence search needs at least 2 visual words");
  budget.validate();

  std::vector<Correspondence> found;
  std::unordered_map<std::size_t, std::size_t> slot_of_point;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (found.size() >= budget.max_correspondences) break;
    const auto& query = queries[q].vector;

    double best = std::numeric_limits<double>::infinity();
    double second = best;
    std::size_t best_word = 0;
    for (std::size_t w = 0; w < vocab.size(); ++w) {
      const double d = squared_distance(query, vocab.centroids[w]);
      if (d < best) {
        second = best;
        best = d;
        best_word = w;
      } else if (d < second) {
        second = d;
      }
    }
    const double d1 = std::sqrt(best);
    const double d2 = std::sqrt(second);
    if (!(d2 > 0.0 && d1 / d2 <= budget.ratio)) continue;

    std::size_t best_point = 0;
    double best_point_d = std::numeric_limits<double>::infinity();
    for (std::size_t p : vocab.word_points[best_word]) {
      for (std::size_t id : cloud.points[p].descriptor_ids) {
        const double d = squared_distance(query, cloud.descriptors[id].vector);
        if (d < best_point_d) {
          best_point_d = d;
          best_point = p;
        }
      }
    }
    if (!std::isfinite(best_point_d)) continue;  // word without points

    const Point3D& pt = cloud.points[best_point];
    Correspondence c;
    c.query = q;
    c.image_pt = {queries[q].keypoint.x, queries[q].keypoint.y};
    c.world_point = best_point;
    c.world_x = pt.x;
    c.world_y = pt.y;
    c.world_z = pt.z;
    c.distance = std::sqrt(best_point_d);
    c.word_distance1 = d1;
    c.word_distance2 = d2;

    const auto it = slot_of_point.find(best_point);
    if (it != slot_of_point.end()) {
      if (c.distance < found[it->second].distance) found[it->second] = c;
      continue;
    }
    slot_of_point.emplace(best_point, found.size());
    found.push_back(c);
  }
  return found;
}

std::vector<PointPair> to_point_pairs(std::span<const Correspondence> matches, const DemGrid& dem) {
  std::vector<PointPair> pairs;
  pairs.reserve(matches.size());
  for (const auto& m : matches) pairs.push_back({m.image_pt, dem.scene_to_pixel(m.world_x, m.world_y)});
  return pairs;
}

bool plausible_footprint(const HomographyModel& model, std::size_t col_begin, std::size_t col_end,
                         std::size_t rows) {
  const double x0 = static_cast<double>(col_begin);
  const double x1 = static_cast<double>(col_end) - 1.0;
  const double y1 = static_cast<double>(rows) - 1.0;
  const std::array<Point2, 4> corners{{{x0, 0.0}, {x1, 0.0}, {x1, y1}, {x0, y1}}};
  std::array<Point2, 4> mapped{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!model.apply(corners[i], mapped[i])) return false;
  }
  double area = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2& a = mapped[i];
    const Point2& b = mapped[(i + 1) % 4];
    const Point2& c = mapped[(i + 2) % 4];
    const double cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
    if (!(cross > 0.0)) return false;  // not convex with the source winding
    area += a.x * b.y - b.x * a.y;
  }
  area *= 0.5;
  const double source_area = (x1 - x0) * y1;
  return area > 0.25 * source_area && area < 4.0 * source_area;
}

bool footprint_within(const HomographyModel& model, std::size_t col_begin, std::size_t col_end,
                      std::size_t rows, const PixelRegion& region, double margin) {
  const double x0 = static_cast<double>(col_begin);
  const double x1 = static_cast<double>(col_end) - 1.0;
  const double y1 = static_cast<double>(rows) - 1.0;
  const double lo_x = static_cast<double>(region.col0) - margin;
  const double lo_y = static_cast<double>(region.row0) - margin;
  const double hi_x = static_cast<double>(region.col0 + region.width) - 1.0 + margin;
  const double hi_y = static_cast<double>(region.row0 + region.height) - 1.0 + margin;
  for (const Point2 corner : {Point2{x0, 0.0}, Point2{x1, 0.0}, Point2{x1, y1}, Point2{x0, y1}}) {
    Point2 m;
    if (!model.apply(corner, m)) return false;
    if (m.x < lo_x || m.x > hi_x || m.y < lo_y || m.y > hi_y) return false;
  }
  return true;
}

std::vector<PixelRegion> neighborhood_grid(std::size_t ortho_width, std::size_t ortho_height,
                                           std::size_t width, std::size_t height) {
  width = std::min(std::max<std::size_t>(width, 1), ortho_width);
  height = std::min(std::max<std::size_t>(height, 1), ortho_height);
  auto starts = [](std::size_t total, std::size_t extent) {
    std::vector<std::size_t> out;
    const std::size_t stride = std::max<std::size_t>(1, extent / 2);
    for (std::size_t s = 0; s + extent <= total; s += stride) out.push_back(s);
    if (out.empty() || out.back() + extent < total) out.push_back(total - extent);
    return out;
  };
  std::vector<PixelRegion> grid;
  for (std::size_t row0 : starts(ortho_height, height)) {
    for (std::size_t col0 : starts(ortho_width, width)) grid.push_back({col0, row0, width, height});
  }
  return grid;
}

HalfMatch search_half(const GrayImage& swir_band, std::size_t col_begin, std::size_t col_end,
                      const Vocabulary& vocab, const PointCloud& cloud, const DemGrid& dem,
                      const SplitSearchOptions& options, std::uint64_t seed) {
  HalfMatch half;
  half.col_begin = col_begin;
  half.col_end = col_end;
  const std::size_t half_width = col_end - col_begin;

  const GrayImage piece = swir_band.crop(col_begin, 0, half_width, swir_band.height);
  std::vector<Descriptor> queries = detect_and_describe(piece, options.features);
  for (auto& d : queries) d.keypoint.x += static_cast<float>(col_begin);
  half.query_count = queries.size();

  const std::size_t nw = options.budget.neighborhood_width ? options.budget.neighborhood_width
                                                           : 2 * half_width;
  const std::size_t nh = options.budget.neighborhood_height ? options.budget.neighborhood_height
                                                            : 2 * swir_band.height;
  std::vector<PixelRegion> grid = neighborhood_grid(dem.width, dem.height, nw, nh);
  Rng rng(seed);
  shuffle(std::span<PixelRegion>(grid), rng);

  bool have_best = false;
  for (std::size_t visit = 0; visit < grid.size(); ++visit) {
    const PixelRegion& region = grid[visit];
    NeighborhoodAttempt attempt{region};
    const Vocabulary local = restrict_vocabulary(vocab, cloud, region);
    if (local.size() < 2) {
      half.visits.push_back(attempt);
      continue;
    }
    std::vector<Correspondence> matches = find_correspondences(queries, local, cloud, options.budget);
    attempt.correspondences = matches.size();
    if (matches.size() < std::max<std::size_t>(4, minimal_sample_size(options.ransac.family))) {
      half.visits.push_back(attempt);
      continue;
    }
    const std::vector<PointPair> pairs = to_point_pairs(matches, dem);
    RansacConfig rc = options.ransac;
    rc.seed = derive_seed(seed, visit + 1);
    RansacResult r;
    try {
      r = ransac_sprt(pairs, rc);
    } catch (const RegistrationError&) {
      half.visits.push_back(attempt);
      continue;
    }
    attempt.inliers = r.inlier_ids.size();
    attempt.accepted =
        r.accepted && plausible_footprint(r.model, col_begin, col_end, swir_band.height) &&
        (options.containment_margin_px < 0.0 ||
         footprint_within(r.model, col_begin, col_end, swir_band.height, region,
                          options.containment_margin_px));
    half.visits.push_back(attempt);
    if (!have_best || attempt.accepted || attempt.inliers > half.ransac.inlier_ids.size()) {
      have_best = true;
      half.region = region;
      half.correspondences = std::move(matches);
      half.ransac = std::move(r);
    }
    if (attempt.accepted) {
      half.accepted = true;
      break;
    }
  }
  return half;
}

SplitSearchResult split_half_search(const GrayImage& swir_band, const Vocabulary& vocab,
                                    const PointCloud& cloud, const DemGrid& dem,
                                    const SplitSearchOptions& options, std::uint64_t seed) {
  options.budget.validate();
  if (vocab.size() < 2) throw ValidationError("correspondence search needs at least 2 visual words");
  const std::size_t mid = swir_band.width / 2;
  if (mid < 32 || swir_band.width - mid < 32 || swir_band.height < 32) {
    throw ValidationError("SWIR image too small to split into two halves of at least 32x32");
  }
  SplitSearchResult result;
  auto run = [&](int which) {
    const std::size_t begin = which == 0 ? 0 : mid;
    const std::size_t end = which == 0 ? mid : swir_band.width;
    return search_half(swir_band, begin, end, vocab, cloud, dem, options,
                       derive_seed(seed, static_cast<std::uint64_t>(which)));
  };
  if (options.parallel) {
    auto left = std::async(std::launch::async, run, 0);
    auto right = std::async(std::launch::async, run, 1);
    result.halves[0] = left.get();
    result.halves[1] = right.get();
  } else {
    result.halves[0] = run(0);
    result.halves[1] = run(1);
  }
  return result;
}

void write_correspondences_jsonl(std::span<const Correspondence> matches,
                                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& m : matches) {
    nlohmann::ordered_json j = {{"image_x", m.image_pt.x}, {"image_y", m.image_pt.y},
                                {"world_x", m.world_x},    {"world_y", m.world_y},
                                {"world_z", m.world_z},    {"distance", m.distance}};
    out << j.dump() << "\n";
  }
}

std::vector<Correspondence> read_correspondences_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<Correspondence> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Correspondence c;
      c.query = out.size();
      c.world_point = out.size();
      c.image_pt = {j.at("image_x").get<double>(), j.at("image_y").get<double>()};
      c.world_x = j.at("world_x").get<double>();
      c.world_y = j.at("world_y").get<double>();
      c.world_z = j.at("world_z").get<double>();
      c.distance = j.at("distance").get<double>();
      out.push_back(c);
    } catch (const nlohmann::json::exception& e) {
      throw InputError("garbled correspondence line in " + path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace swirseg
