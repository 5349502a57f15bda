#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "swirseg/features.h"
#include "swirseg/raster.h"

namespace swirseg {

using DescriptorVector = std::array<float, kDescriptorDim>;

// A DEM pixel that carries at least one orthophoto descriptor.
struct Point3D {
  std::size_t col = 0;
  std::size_t row = 0;
  double x = 0.0;  // scene meters
  double y = 0.0;
  double z = 0.0;  // elevation at the pixel
  std::vector<std::size_t> descriptor_ids;
};

// Orthophoto descriptors lifted onto the DEM.
struct PointCloud {
  std::vector<Point3D> points;           // ordered by (row, col)
  std::vector<Descriptor> descriptors;   // indexed by descriptor_ids
  std::size_t dropped = 0;               // descriptors outside the DEM
};

// Groups descriptors by the DEM pixel containing their keypoint. The
// orthophoto is assumed pixel-registered to the DEM, so keypoint (x, y)
// rounds to DEM (col, row).
PointCloud lift_to_3d(std::vector<Descriptor> descriptors, const DemGrid& dem);

struct KMeansConfig {
  std::size_t k = 256;
  std::uint64_t seed = 0;
  std::size_t max_iters = 50;
};

struct KMeansResult {
  std::vector<DescriptorVector> centroids;
  std::vector<std::size_t> assignments;
  // Within-cluster sum of squares after each Lloyd update.
  std::vector<double> objective_history;
  std::size_t iterations = 0;
  bool converged = false;
};

// Lloyd iterations from k-means++ seeding until no assignment changes or
// max_iters. Empty clusters are re-seeded from the vector farthest from its
// centroid. Throws ValidationError when k == 0 or k > n.
KMeansResult kmeans(std::span<const DescriptorVector> vectors, const KMeansConfig& config);

double within_cluster_sum_of_squares(std::span<const DescriptorVector> vectors,
                                     std::span<const DescriptorVector> centroids,
                                     std::span<const std::size_t> assignments);

// Index of the nearest centroid; ties go to the lower index.
std::size_t nearest_centroid(std::span<const float> v, std::span<const DescriptorVector> centroids);

struct Vocabulary {
  std::vector<DescriptorVector> centroids;
  // For each word, the ids of points with at least one descriptor in it.
  std::vector<std::vector<std::size_t>> word_points;

  std::size_t size() const { return centroids.size(); }
};

// Clusters every retained descriptor of the cloud into visual words.
Vocabulary build_vocabulary(const PointCloud& cloud, const KMeansConfig& config);

// Keeps only points whose DEM pixel lies inside [col0, col0 + w) x
// [row0, row0 + h); words left without points are dropped.
struct PixelRegion {
  std::size_t col0 = 0;
  std::size_t row0 = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  bool contains(double col, double row) const {
    return col >= static_cast<double>(col0) && row >= static_cast<double>(row0) &&
           col < static_cast<double>(col0 + width) && row < static_cast<double>(row0 + height);
  }
};
Vocabulary restrict_vocabulary(const Vocabulary& vocab, const PointCloud& cloud,
                               const PixelRegion& region);

// Vocabulary persistence: binary u32 k, u32 dim, k * dim float32 centroids
// (little-endian), plus a JSON index holding the points and word->point map.
void write_vocabulary(const Vocabulary& vocab, const PointCloud& cloud,
                      const std::filesystem::path& centroid_path,
                      const std::filesystem::path& index_path);
// Descriptors are not part of the vocabulary files; the caller supplies the
// orthophoto descriptor set the index refers to.
std::pair<Vocabulary, PointCloud> read_vocabulary(const std::filesystem::path& centroid_path,
                                                  const std::filesystem::path& index_path,
                                                  std::vector<Descriptor> descriptors);

}  // namespace swirseg
