#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "swirseg/raster.h"

namespace swirseg {

inline constexpr std::size_t kDescriptorDim = 128;

struct Keypoint {
  float x = 0.0f;  // pixel coordinates, pixel centers at integers
  float y = 0.0f;
  float scale = 0.0f;        // Gaussian sigma in image pixels
  float orientation = 0.0f;  // radians in [0, 2*pi)
};

struct Descriptor {
  Keypoint keypoint;
  std::array<float, kDescriptorDim> vector{};
};

struct SiftConfig {
  double base_sigma = 1.6;
  int intervals = 3;
  // Octaves are added while the octave's smaller side stays >= this.
  std::size_t min_octave_size = 16;
  bool upsample = false;
  double assumed_blur = 0.5;
  double contrast_threshold = 0.03;
  double edge_ratio = 10.0;
  int orientation_bins = 36;
  double orientation_peak_ratio = 0.8;
  int max_interpolation_steps = 5;
  double descriptor_clip = 0.2;
  // Histogram-equalize the input before building the scale space.
  bool equalize = false;
};

// Detects scale-space extrema of the difference-of-Gaussians stack and
// computes one 4x4x8 gradient-histogram descriptor per dominant orientation.
// The result is sorted by (y, x, scale, orientation).
// Throws ValidationError when the image is smaller than 32x32.
std::vector<Descriptor> detect_and_describe(const GrayImage& image, const SiftConfig& config = {});

struct DescriptorMatch {
  std::size_t query = 0;
  std::size_t target = 0;
  double distance = 0.0;
};

// Squared Euclidean distance accumulated in double, component order.
double squared_distance(std::span<const float> a, std::span<const float> b);

// Two-nearest-neighbor ratio test by exhaustive search. Ties in distance go
// to the lower target index. A pair is emitted iff d1 / d2 <= ratio.
std::vector<DescriptorMatch> match_ratio_test(std::span<const Descriptor> queries,
                                              std::span<const Descriptor> targets,
                                              double ratio = 0.7);

// Binary container: u32 count, u32 dim (=128), count keypoint records of
// four float32 (x, y, scale, orientation), then count * 128 float32.
// Everything little-endian.
void write_descriptors(std::span<const Descriptor> descriptors, const std::filesystem::path& path);
std::vector<Descriptor> read_descriptors(const std::filesystem::path& path);

}  // namespace swirseg
