#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "swirseg/fusion.h"
#include "swirseg/raster.h"
#include "swirseg/robust_estimation.h"

namespace swirseg {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct SceneConfig {
  std::size_t ortho_size = 256;  // square ortho/DEM, pixels
  std::size_t swir_width = 128;
  std::size_t swir_height = 128;
  std::size_t bands = 64;
  double wavelength_min_um = 0.9;
  double wavelength_max_um = 2.5;
  double pixel_size_m = 1.0;
  double origin_x = 1000.0;
  double origin_y = 2000.0;
  double ground_elevation_m = 100.0;

  std::size_t block_pitch = 48;
  std::size_t road_width = 8;
  std::size_t buildings_per_block = 1;
  std::size_t houses_per_block = 3;
  std::size_t trees_per_block = 4;
  std::size_t parking_per_block = 1;
  std::size_t vehicles_per_lot = 4;
  std::size_t road_vehicles_per_block = 4;
  std::size_t roof_units_per_building = 2;
  Range building_height{10.0, 50.0};
  Range house_height{4.0, 6.0};
  Range tree_height{5.0, 15.0};
  Range building_side{12.0, 18.0};
  Range house_side{7.0, 9.0};
  Range tree_radius{3.0, 5.0};

  double spectral_noise = 0.005;
  double texture_amplitude = 0.10;

  // Placement of the SWIR footprint inside the ortho. With random_offset the
  // footprint center is drawn from the seed on integer offsets.
  bool random_offset = true;
  double offset_x = 64.0;  // ortho pixel of SWIR pixel (0, 0) at rotation 0
  double offset_y = 64.0;
  double rotation_deg = 0.0;
  double scale = 1.0;

  std::uint64_t seed = 1;

  void validate() const;
};

enum class Material : std::uint8_t {
  kGrass = 0,
  kTree = 1,
  kRoad = 2,
  kParking = 3,
  kHouseRoof = 4,
  kBuildingRoof = 5,
  kVehicle = 6,
};

inline constexpr std::size_t kMaterialCount = 7;

std::string_view material_name(Material m);
bool is_vegetation(Material m);

// Noise-free reflectance template for a material at one wavelength.
double canonical_reflectance(Material m, double wavelength_um);

struct MaterialSpectrum {
  Material material = Material::kGrass;
  std::vector<float> reflectance;  // one value per cube band
};

struct GroundTruth {
  SegmentMap labels;  // SWIR footprint
  HomographyModel transform;  // SWIR pixel -> ortho/DEM pixel
  std::vector<MaterialSpectrum> spectra;
  std::vector<Material> materials;  // SWIR footprint, row-major
  std::vector<float> height_above_ground;  // SWIR footprint, row-major
};

struct SyntheticScene {
  SceneConfig config;
  HyperCube cube;
  DemGrid dem;
  GrayImage ortho;
  GroundTruth truth;
};

SyntheticScene generate_scene(const SceneConfig& config);

nlohmann::ordered_json scene_config_to_json(const SceneConfig& config);
// Missing keys keep their defaults; unknown keys throw ValidationError.
SceneConfig scene_config_from_json(const nlohmann::json& j);

// Writes cube.hdr/.raw, dem.raw/.json, ortho.pgm, truth_labels.pgm/.json and
// truth.json (transform and config echo) into `dir`.
void write_scene(const SyntheticScene& scene, const std::filesystem::path& dir);
HomographyModel read_truth_transform(const std::filesystem::path& truth_json);

}  // namespace swirseg
