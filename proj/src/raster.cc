#include "swirseg/raster.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "swirseg/error.h"

namespace swirseg {

HyperCube::HyperCube(std::size_t lines, std::size_t samples, std::vector<double> wavelengths_um,
                     std::vector<float> values)
    : lines_(lines), samples_(samples), wavelengths_(std::move(wavelengths_um)),
      values_(std::move(values)) {
  if (lines_ == 0 || samples_ == 0 || wavelengths_.empty()) {
    throw ValidationError("cube dimensions must be positive");
  }
  for (std::size_t i = 1; i < wavelengths_.size(); ++i) {
    if (!(wavelengths_[i] > wavelengths_[i - 1])) {
      throw ValidationError("cube wavelengths must be strictly increasing (band " +
                            std::to_string(i) + ")");
    }
  }
  if (values_.size() != lines_ * samples_ * wavelengths_.size()) {
    throw ValidationError("cube value count " + std::to_string(values_.size()) +
                          " does not match lines * samples * bands");
  }
  for (float v : values_) {
    if (!std::isfinite(v)) throw ValidationError("cube contains non-finite values");
  }
}

void HyperCube::spectrum(std::size_t line, std::size_t sample, std::vector<float>& out) const {
  out.resize(bands());
  const std::size_t plane = lines_ * samples_;
  std::size_t offset = line * samples_ + sample;
  for (std::size_t b = 0; b < out.size(); ++b, offset += plane) out[b] = values_[offset];
}

float HyperCube::max_value() const {
  return values_.empty() ? 0.0f : *std::max_element(values_.begin(), values_.end());
}

CubeQualityReport assess_quality(const HyperCube& cube) {
  CubeQualityReport report;
  const auto& v = cube.values();
  if (v.empty()) return report;
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  report.min_value = *lo;
  report.max_value = *hi;
  report.negative_values =
      static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](float x) { return x < 0.0f; }));
  return report;
}

void DemGrid::validate() const {
  if (width == 0 || height == 0) throw ValidationError("DEM dimensions must be positive");
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size)) {
    throw ValidationError("DEM pixel size must be positive");
  }
  if (elevations.size() != width * height) {
    throw ValidationError("DEM elevation count does not match width * height");
  }
  for (float e : elevations) {
    if (!std::isfinite(e)) throw ValidationError("DEM contains non-finite elevations");
  }
}

GrayImage GrayImage::crop(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) const {
  if (x0 + w > width || y0 + h > height) throw ValidationError("crop outside image bounds");
  GrayImage out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>((y0 + y) * width + x0), w,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(y * w));
  }
  return out;
}

std::size_t nearest_band_index(const HyperCube& cube, double target_um) {
  const auto& wl = cube.wavelengths();
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < wl.size(); ++i) {
    const double gap = std::abs(wl[i] - target_um);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return best;
}

std::vector<float> normalize_unit(std::span<const double> values) {
  std::vector<float> out(values.size(), 0.5f);
  if (values.empty()) return out;
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<float>((values[i] - lo) / range);
  }
  return out;
}

GrayImage extract_band(const HyperCube& cube, std::size_t band) {
  if (band >= cube.bands()) {
    throw ValidationError("band index " + std::to_string(band) + " out of range (cube has " +
                          std::to_string(cube.bands()) + " bands)");
  }
  const auto plane = cube.band(band);
  std::vector<double> wide(plane.begin(), plane.end());
  GrayImage image;
  image.width = cube.samples();
  image.height = cube.lines();
  image.pixels = normalize_unit(wide);
  return image;
}

GrayImage band_average(const HyperCube& cube) {
  const std::size_t n = cube.pixel_count();
  std::vector<double> mean(n, 0.0);
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    const auto plane = cube.band(b);
    for (std::size_t i = 0; i < n; ++i) mean[i] += plane[i];
  }
  const double inv = 1.0 / static_cast<double>(cube.bands());
  for (double& m : mean) m *= inv;
  GrayImage image;
  image.width = cube.samples();
  image.height = cube.lines();
  image.pixels = normalize_unit(mean);
  return image;
}

}  // namespace swirseg
