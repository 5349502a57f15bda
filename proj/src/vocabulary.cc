#include "swirseg/vocabulary.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#include <json.hpp>

#include "binary_io.h"
#include "swirseg/error.h"
#include "swirseg/random.h"

namespace swirseg {
namespace {

// Runs fn(begin, end) over disjoint chunks of [0, n). Each index is touched by
// exactly one worker, so results do not depend on the thread count.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn fn) {
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
  if (workers == 1 || n < 2048) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    pool.emplace_back(fn, begin, std::min(n, begin + chunk));
  }
  for (auto& t : pool) t.join();
}

std::vector<DescriptorVector> kmeanspp_seeds(std::span<const DescriptorVector> vectors, std::size_t k,
                                             Rng& rng) {
  const std::size_t n = vectors.size();
  std::vector<DescriptorVector> centers;
  centers.reserve(k);
  centers.push_back(vectors[uniform_index(rng, n)]);
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(vectors[i], centers[0]);
  while (centers.size() < k) {
    double total = 0.0;
    for (double d : nearest) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = uniform_unit(rng) * total;
      double running = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        running += nearest[i];
        if (running > target && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, n);
    }
    centers.push_back(vectors[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(vectors[i], centers.back()));
    }
  }
  return centers;
}

}  // namespace

PointCloud lift_to_3d(std::vector<Descriptor> descriptors, const DemGrid& dem) {
  PointCloud cloud;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> by_pixel;
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    const auto& kp = descriptors[i].keypoint;
    const long col = std::lround(kp.x);
    const long row = std::lround(kp.y);
    if (col < 0 || row < 0 || col >= static_cast<long>(dem.width) ||
        row >= static_cast<long>(dem.height)) {
      ++cloud.dropped;
      continue;
    }
    by_pixel[{static_cast<std::size_t>(row), static_cast<std::size_t>(col)}].push_back(i);
  }
  cloud.points.reserve(by_pixel.size());
  for (auto& [rc, ids] : by_pixel) {
    Point3D p;
    p.row = rc.first;
    p.col = rc.second;
    const Point2 scene = dem.pixel_to_scene(static_cast<double>(p.col), static_cast<double>(p.row));
    p.x = scene.x;
    p.y = scene.y;
    p.z = dem.at(p.col, p.row);
    p.descriptor_ids = std::move(ids);
    cloud.points.push_back(std::move(p));
  }
  cloud.descriptors = std::move(descriptors);
  return cloud;
}

std::size_t nearest_centroid(std::span<const float> v, std::span<const DescriptorVector> centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(v, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double within_cluster_sum_of_squares(std::span<const DescriptorVector> vectors,
                                     std::span<const DescriptorVector> centroids,
                                     std::span<const std::size_t> assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    total += squared_distance(vectors[i], centroids[assignments[i]]);
  }
  return total;
}

KMeansResult kmeans(std::span<const DescriptorVector> vectors, const KMeansConfig& config) {
  const std::size_t n = vectors.size();
  const std::size_t k = config.k;
  if (k == 0) throw ValidationError("k-means needs k >= 1");
  if (n < k) {
    throw ValidationError("k-means needs at least k vectors (k = " + std::to_string(k) +
                          ", n = " + std::to_string(n) + ")");
  }

  Rng rng(config.seed);
  KMeansResult result;
  result.centroids = kmeanspp_seeds(vectors, k, rng);
  result.assignments.assign(n, k);  // k marks "unassigned" before the first pass

  auto assign_all = [&]() {
    std::vector<std::size_t> next(n);
    parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) next[i] = nearest_centroid(vectors[i], result.centroids);
    });
    std::size_t changes = 0;
    for (std::size_t i = 0; i < n; ++i) changes += next[i] != result.assignments[i];
    result.assignments = std::move(next);
    return changes;
  };

  for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
    const std::size_t changes = assign_all();
    if (changes == 0) {
      result.converged = true;
      break;
    }
    ++result.iterations;

    // Update: per-cluster means, summed in vector-index order.
    std::vector<std::array<double, kDescriptorDim>> sums(k);
    std::vector<std::size_t> counts(k, 0);
    for (auto& s : sums) s.fill(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[result.assignments[i]];
      for (std::size_t d = 0; d < kDescriptorDim; ++d) s[d] += vectors[i][d];
      ++counts[result.assignments[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t d = 0; d < kDescriptorDim; ++d) {
        result.centroids[c][d] = static_cast<float>(sums[c][d] * inv);
      }
    }
    // Empty clusters take the vector currently farthest from its centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[result.assignments[i]] <= 1) continue;
        const double d = squared_distance(vectors[i], result.centroids[result.assignments[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far_d < 0.0) break;
      --counts[result.assignments[far]];
      result.assignments[far] = c;
      counts[c] = 1;
      result.centroids[c] = vectors[far];
    }
    result.objective_history.push_back(
        within_cluster_sum_of_squares(vectors, result.centroids, result.assignments));
  }
  if (!result.converged) assign_all();
  return result;
}

Vocabulary build_vocabulary(const PointCloud& cloud, const KMeansConfig& config) {
  std::vector<DescriptorVector> vectors;
  std::vector<std::size_t> owner;
  for (std::size_t p = 0; p < cloud.points.size(); ++p) {
    for (std::size_t id : cloud.points[p].descriptor_ids) {
      vectors.push_back(cloud.descriptors[id].vector);
      owner.push_back(p);
    }
  }
  const KMeansResult km = kmeans(vectors, config);
  Vocabulary vocab;
  vocab.centroids = km.centroids;
  vocab.word_points.resize(vocab.centroids.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    auto& pts = vocab.word_points[km.assignments[i]];
    if (pts.empty() || pts.back() != owner[i]) pts.push_back(owner[i]);
  }
  for (auto& pts : vocab.word_points) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  }
  return vocab;
}

Vocabulary restrict_vocabulary(const Vocabulary& vocab, const PointCloud& cloud,
                               const PixelRegion& region) {
  Vocabulary out;
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    std::vector<std::size_t> kept;
    for (std::size_t p : vocab.word_points[w]) {
      const auto& pt = cloud.points[p];
      if (region.contains(static_cast<double>(pt.col), static_cast<double>(pt.row))) kept.push_back(p);
    }
    if (kept.empty()) continue;
    out.centroids.push_back(vocab.centroids[w]);
    out.word_points.push_back(std::move(kept));
  }
  return out;
}

void write_vocabulary(const Vocabulary& vocab, const PointCloud& cloud,
                      const std::filesystem::path& centroid_path,
                      const std::filesystem::path& index_path) {
  {
    std::ofstream out(centroid_path, std::ios::binary);
    if (!out) throw InputError("cannot write " + centroid_path.string());
    detail::write_u32_le(out, static_cast<std::uint32_t>(vocab.size()));
    detail::write_u32_le(out, static_cast<std::uint32_t>(kDescriptorDim));
    for (const auto& c : vocab.centroids) detail::write_f32_le(out, c);
  }
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : cloud.points) {
    points.push_back({{"col", p.col}, {"row", p.row}, {"x", p.x}, {"y", p.y}, {"z", p.z},
                      {"descriptor_ids", p.descriptor_ids}});
  }
  nlohmann::json index = {{"descriptor_count", cloud.descriptors.size()},
                          {"dropped", cloud.dropped},
                          {"points", std::move(points)},
                          {"words", vocab.word_points}};
  std::ofstream out(index_path);
  if (!out) throw InputError("cannot write " + index_path.string());
  out << index.dump() << "\n";
}

std::pair<Vocabulary, PointCloud> read_vocabulary(const std::filesystem::path& centroid_path,
                                                  const std::filesystem::path& index_path,
                                                  std::vector<Descriptor> descriptors) {
  Vocabulary vocab;
  {
    std::ifstream in(centroid_path, std::ios::binary);
    if (!in) throw InputError("cannot open " + centroid_path.string());
    const std::uint32_t k = detail::read_u32_le(in, "vocabulary header");
    const std::uint32_t dim = detail::read_u32_le(in, "vocabulary header");
    if (dim != kDescriptorDim) throw InputError("vocabulary dimension must be 128");
    vocab.centroids.resize(k);
    for (auto& c : vocab.centroids) detail::read_f32_le(in, c, "vocabulary centroids");
  }
  std::ifstream in(index_path);
  if (!in) throw InputError("cannot open " + index_path.string());
  PointCloud cloud;
  try {
    const auto index = nlohmann::json::parse(in);
    if (index.at("descriptor_count").get<std::size_t>() != descriptors.size()) {
      throw InputError("vocabulary index refers to a different descriptor set");
    }
    cloud.dropped = index.value("dropped", std::size_t{0});
    for (const auto& jp : index.at("points")) {
      Point3D p;
      p.col = jp.at("col").get<std::size_t>();
      p.row = jp.at("row").get<std::size_t>();
      p.x = jp.at("x").get<double>();
      p.y = jp.at("y").get<double>();
      p.z = jp.at("z").get<double>();
      p.descriptor_ids = jp.at("descriptor_ids").get<std::vector<std::size_t>>();
      for (std::size_t id : p.descriptor_ids) {
        if (id >= descriptors.size()) throw InputError("vocabulary index descriptor id out of range");
      }
      cloud.points.push_back(std::move(p));
    }
    vocab.word_points = index.at("words").get<std::vector<std::vector<std::size_t>>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError("garbled vocabulary index: " + std::string(e.what()));
  }
  if (vocab.word_points.size() != vocab.centroids.size()) {
    throw InputError("vocabulary index and centroid file disagree on k");
  }
  for (const auto& pts : vocab.word_points) {
    for (std::size_t p : pts) {
      if (p >= cloud.points.size()) throw InputError("vocabulary index point id out of range");
    }
  }
  cloud.descriptors = std::move(descriptors);
  return {std::move(vocab), std::move(cloud)};
}

}  // namespace swirseg
