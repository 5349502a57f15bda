#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "swirseg/raster.h"
#include "swirseg/raster_io.h"
#include "swirseg/robust_estimation.h"
#include "swirseg/spectral_index.h"

namespace swirseg {

// Per-pixel association of SWIR spectra with DEM elevation.
struct FusedScene {
  std::size_t width = 0;   // cube samples
  std::size_t height = 0;  // cube lines
  std::vector<float> elevation;
  std::vector<float> height_above_ground;
  std::vector<float> wetness;
  std::vector<std::uint8_t> valid;          // 0 where the pixel maps off the DEM
  std::vector<std::uint8_t> wetness_valid;  // 0 where the wetness guard fired

  std::size_t size() const { return width * height; }
  double invalid_fraction() const;
};

// A transform applying to SWIR columns [col_begin, col_end).
struct ColumnModel {
  std::size_t col_begin = 0;
  std::size_t col_end = 0;
  HomographyModel model;
};

struct FusionOptions {
  double ground_window_m = 64.0;
  // When false the DEM is taken to already hold height above ground.
  bool normalize_height = true;
  WetnessOptions wetness;
};

// Elevation minus the minimum over a centered square window (side
// window_m, rounded to an odd pixel count >= 3), clamped at zero. The window
// is clipped at the grid border.
std::vector<float> height_above_ground(const DemGrid& dem, double window_m = 64.0);

// Bilinear sample at fractional pixel coordinates; false outside the grid.
bool sample_bilinear(std::span<const float> grid, std::size_t width, std::size_t height, double x,
                     double y, float& out);

// Maps each SWIR pixel center through the model covering its column into
// DEM pixel coordinates and samples elevation and height above ground.
FusedScene associate_voxels(const WetnessMap& wetness, std::span<const ColumnModel> models,
                            const DemGrid& dem, const FusionOptions& options = {});
FusedScene associate_voxels(const HyperCube& cube, const HomographyModel& model, const DemGrid& dem,
                            const FusionOptions& options = {});

enum class SegmentLabel : std::uint8_t {
  kRoadOther = 0,
  kGrass = 1,
  kTree = 2,
  kHouse = 3,
  kBuilding = 4,
  kInvalid = 255,
};

std::string_view label_name(SegmentLabel label);

struct RuleThresholds {
  double wet_threshold = 1.0;
  double elev_low = 3.0;
  double elev_high = 7.0;
  double canopy = 3.0;

  void validate() const;
};

struct SegmentMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<SegmentLabel> labels;

  SegmentLabel at(std::size_t x, std::size_t y) const { return labels[y * width + x]; }
};

// The spectral-elevation rule table for one pixel. Every threshold uses >=
// for the upper class; a failed wetness guard takes the dry branch.
SegmentLabel classify_pixel(double wetness, bool wetness_valid, double height,
                            const RuleThresholds& t);
SegmentMap classify(const FusedScene& fused, const RuleThresholds& t);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

Rgb label_color(SegmentLabel label);
RgbImage render_segmap(const SegmentMap& map);
// White (wettest) -> yellow -> red -> black (driest); guarded pixels magenta.
RgbImage render_wetness(const WetnessMap& map);

// Label codes as P5 plus a JSON legend next to it (extension ".json").
void write_segmap(const SegmentMap& map, const std::filesystem::path& pgm_path);
SegmentMap read_segmap(const std::filesystem::path& pgm_path);

// A fused scene as a directory: elevation.raw, height_above_ground.raw and
// wetness.raw in the DEM raster format, valid.pgm and wetness_valid.pgm as
// 0/1 codes.
void write_fused(const FusedScene& fused, const std::filesystem::path& dir);
FusedScene read_fused(const std::filesystem::path& dir);

}  // namespace swirseg
