#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swirseg/fusion.h"

namespace swirseg {

inline constexpr std::size_t kClassCount = 5;

// Table layout order: Tree, Grass, Building, House, RoadOther.
inline constexpr std::array<SegmentLabel, kClassCount> kClassOrder{
    SegmentLabel::kTree, SegmentLabel::kGrass, SegmentLabel::kBuilding, SegmentLabel::kHouse,
    SegmentLabel::kRoadOther};

std::optional<std::size_t> class_index(SegmentLabel label);

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kClassCount>, kClassCount> counts{};

  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t c) const;
  std::uint64_t column_sum(std::size_t c) const;
};

struct LabeledSample {
  std::size_t pixel = 0;  // row-major index into the scene
  SegmentLabel truth = SegmentLabel::kInvalid;
};

// Exactly n_per_class pixels per class, drawn uniformly without replacement
// among pixels whose truth is that class and whose fused pixel is valid.
// Throws ValidationError naming the class and its available count when a
// class is too small.
std::vector<LabeledSample> sample_library(const SegmentMap& truth, const FusedScene& fused,
                                          std::size_t n_per_class, std::uint64_t seed);

ConfusionMatrix confusion(std::span<const SegmentLabel> truth, std::span<const SegmentLabel> predicted);

// Ratios in [0, 1]; nullopt where the metric is undefined (empty row/column).
struct ClassMetrics {
  std::array<std::optional<double>, kClassCount> precision{};
  std::array<std::optional<double>, kClassCount> recall{};
  std::array<std::optional<double>, kClassCount> accuracy{};
  // Unweighted mean of the defined one-vs-rest accuracies.
  double overall_accuracy = 0.0;
  std::vector<std::string> warnings;
};

ClassMetrics metrics(const ConfusionMatrix& cm);

// Percentage rounded half-up to one decimal.
double percent_1dp(double ratio);

void write_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path);
ConfusionMatrix read_confusion_csv(const std::filesystem::path& path);
std::string metrics_json(const ClassMetrics& m);

}  // namespace swirseg
