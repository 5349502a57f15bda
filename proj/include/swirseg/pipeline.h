#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "swirseg/correspondence.h"
#include "swirseg/evaluation.h"
#include "swirseg/fusion.h"
#include "swirseg/synth_scene.h"

namespace swirseg {

// Every tunable of the end-to-end run. Parsed from JSON with unknown keys
// rejected; echoed in full into the run report.
struct PipelineConfig {
  std::uint64_t seed = 1;

  // Real inputs. When cube is empty the scene is synthesized from `scene`.
  std::filesystem::path cube;
  std::filesystem::path dem;
  std::filesystem::path ortho;
  std::filesystem::path truth_labels;  // optional, enables evaluation
  std::filesystem::path truth_transform;  // optional truth.json, enables RMS
  std::filesystem::path output_dir;       // empty: nothing written

  SceneConfig scene;
  double swir_band_um = 1.2;
  SiftConfig features;
  KMeansConfig kmeans;
  SearchBudget search;
  RansacConfig ransac;
  bool parallel_halves = true;
  double containment_margin_px = 2.0;  // negative: no containment check
  bool refine_global = false;
  FusionOptions fusion;
  RuleThresholds rules;
  bool adaptive_wet_threshold = true;
  std::size_t samples_per_class = 500;
  // Lower the per-class sample count to the smallest class when needed.
  bool shrink_samples_to_available = true;

  void validate() const;
};

nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig read_pipeline_config(const std::filesystem::path& path);

struct PipelineResult {
  PipelineConfig config;
  SplitSearchResult registration;
  std::array<HomographyModel, 2> models;  // as used for fusion
  double wet_threshold = 0.0;
  FusedScene fused;
  SegmentMap segmentation;
  std::optional<double> registration_rms_px;
  std::optional<ConfusionMatrix> confusion;
  std::optional<ClassMetrics> metrics;
  std::size_t samples_per_class = 0;
  std::vector<std::string> warnings;
  nlohmann::ordered_json report;      // deterministic part
  nlohmann::ordered_json timestamps;  // wall-clock part
};

// RMS distance between the two transforms over SWIR pixels [col_begin,
// col_end) x [0, rows).
double transform_rms(const HomographyModel& a, const HomographyModel& b, std::size_t col_begin,
                     std::size_t col_end, std::size_t rows);

// Runs synth-or-load, wetness, features, vocabulary, split search,
// fusion, segmentation and (with truth) evaluation. Throws
// RegistrationError when neither half registers.
PipelineResult run_pipeline(const PipelineConfig& config);

// Report JSON with the timestamps object appended last.
std::string full_report(const PipelineResult& result);

}  // namespace swirseg
