#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace swirseg {

// Hyperspectral datacube. Values are stored band-sequential: the sample at
// (line, sample, band) lives at (band * lines + line) * samples + sample.
class HyperCube {
 public:
  HyperCube() = default;
  // Throws ValidationError when the invariants below do not hold:
  // wavelengths strictly increasing, one wavelength per band, values sized
  // lines * samples * bands and finite.
  HyperCube(std::size_t lines, std::size_t samples, std::vector<double> wavelengths_um,
            std::vector<float> values);

  std::size_t lines() const { return lines_; }
  std::size_t samples() const { return samples_; }
  std::size_t bands() const { return wavelengths_.size(); }
  std::size_t pixel_count() const { return lines_ * samples_; }

  const std::vector<double>& wavelengths() const { return wavelengths_; }
  const std::vector<float>& values() const { return values_; }

  float at(std::size_t line, std::size_t sample, std::size_t band) const {
    return values_[(band * lines_ + line) * samples_ + sample];
  }
  std::span<const float> band(std::size_t b) const {
    return {values_.data() + b * lines_ * samples_, lines_ * samples_};
  }
  // Copies the spectral fiber at one pixel into `out` (resized to bands()).
  void spectrum(std::size_t line, std::size_t sample, std::vector<float>& out) const;

  float max_value() const;

 private:
  std::size_t lines_ = 0;
  std::size_t samples_ = 0;
  std::vector<double> wavelengths_;
  std::vector<float> values_;
};

// Non-fatal observations about a loaded cube.
struct CubeQualityReport {
  std::size_t negative_values = 0;
  float min_value = 0.0f;
  float max_value = 0.0f;
};

CubeQualityReport assess_quality(const HyperCube& cube);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Elevation raster in meters. Pixel (col, row) is centered at
// origin + (col, row) * pixel_size in scene meters.
struct DemGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  double pixel_size = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<float> elevations;

  float at(std::size_t col, std::size_t row) const { return elevations[row * width + col]; }
  Point2 pixel_to_scene(double col, double row) const {
    return {origin_x + col * pixel_size, origin_y + row * pixel_size};
  }
  Point2 scene_to_pixel(double x, double y) const {
    return {(x - origin_x) / pixel_size, (y - origin_y) / pixel_size};
  }
  // Throws ValidationError on bad dims, pixel_size <= 0 or non-finite values.
  void validate() const;
};

// Single-channel image with intensities in [0, 1], row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, float fill = 0.0f)
      : width(w), height(h), pixels(w * h, fill) {}

  float at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  float& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }

  // Columns [x0, x0 + w) and rows [y0, y0 + h).
  GrayImage crop(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) const;
};

// Index of the band whose wavelength is closest to `target_um`; ties go to
// the lower index.
std::size_t nearest_band_index(const HyperCube& cube, double target_um);

// Min-max normalizes arbitrary values into [0, 1]; a constant input maps to
// 0.5 everywhere.
std::vector<float> normalize_unit(std::span<const double> values);

GrayImage extract_band(const HyperCube& cube, std::size_t band);
GrayImage band_average(const HyperCube& cube);

}  // namespace swirseg
