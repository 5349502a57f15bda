#include "swirseg/evaluation.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "swirseg/error.h"
#include "swirseg/random.h"

namespace swirseg {

std::optional<std::size_t> class_index(SegmentLabel label) {
  for (std::size_t i = 0; i < kClassCount; ++i) {
    if (kClassOrder[i] == label) return i;
  }
  return std::nullopt;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) {
    for (auto v : row) t += v;
  }
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::uint64_t t = 0;
  for (auto v : counts[c]) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t c) const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += row[c];
  return t;
}

std::vector<LabeledSample> sample_library(const SegmentMap& truth, const FusedScene& fused,
                                          std::size_t n_per_class, std::uint64_t seed) {
  if (truth.labels.size() != fused.size()) {
    throw ValidationError("truth map and fused scene differ in size");
  }
  std::array<std::vector<std::size_t>, kClassCount> pools;
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    if (!fused.valid[i]) continue;
    if (const auto c = class_index(truth.labels[i])) pools[*c].push_back(i);
  }
  std::vector<LabeledSample> out;
  out.reserve(n_per_class * kClassCount);
  Rng rng(seed);
  for (std::size_t c = 0; c < kClassCount; ++c) {
    auto& pool = pools[c];
    if (pool.size() < n_per_class) {
      throw ValidationError("class " + std::string(label_name(kClassOrder[c])) + " has only " +
                            std::to_string(pool.size()) + " valid pixels, " +
                            std::to_string(n_per_class) + " requested");
    }
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const std::size_t j = i + uniform_index(rng, pool.size() - i);
      std::swap(pool[i], pool[j]);
      out.push_back({pool[i], kClassOrder[c]});
    }
  }
  return out;
}

ConfusionMatrix confusion(std::span<const SegmentLabel> truth, std::span<const SegmentLabel> predicted) {
  if (truth.size() != predicted.size()) throw ValidationError("label sequences differ in length");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = class_index(truth[i]);
    const auto p = class_index(predicted[i]);
    if (!t || !p) throw ValidationError("label outside the five evaluated classes at index " + std::to_string(i));
    ++cm.counts[*t][*p];
  }
  return cm;
}

ClassMetrics metrics(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw ValidationError("confusion matrix is empty");
  ClassMetrics m;
  double accuracy_sum = 0.0;
  std::size_t accuracy_count = 0;
  for (std::size_t c = 0; c < kClassCount; ++c) {
    const std::uint64_t tp = cm.counts[c][c];
    const std::uint64_t row = cm.row_sum(c);
    const std::uint64_t col = cm.column_sum(c);
    const std::string name(label_name(kClassOrder[c]));
    if (col > 0) {
      m.precision[c] = static_cast<double>(tp) / static_cast<double>(col);
    } else {
      m.warnings.push_back("precision undefined for " + name + " (no predictions)");
    }
    if (row > 0) {
      m.recall[c] = static_cast<double>(tp) / static_cast<double>(row);
      const std::uint64_t fn = row - tp;
      const std::uint64_t fp = col - tp;
      m.accuracy[c] = 1.0 - static_cast<double>(fp + fn) / static_cast<double>(total);
      accuracy_sum += *m.accuracy[c];
      ++accuracy_count;
    } else {
      m.warnings.push_back("recall and accuracy undefined for " + name +
                           " (no true samples); excluded from overall accuracy");
    }
  }
  m.overall_accuracy = accuracy_count ? accuracy_sum / static_cast<double>(accuracy_count) : 0.0;
  return m;
}

double percent_1dp(double ratio) { return std::floor(ratio * 1000.0 + 0.5) / 10.0; }

void write_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "true\\predicted";
  for (SegmentLabel l : kClassOrder) out << "," << label_name(l);
  out << "\n";
  for (std::size_t r = 0; r < kClassCount; ++r) {
    out << label_name(kClassOrder[r]);
    for (std::size_t c = 0; c < kClassCount; ++c) out << "," << cm.counts[r][c];
    out << "\n";
  }
}

ConfusionMatrix read_confusion_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  ConfusionMatrix cm;
  std::string line;
  std::size_t row = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header_seen) {
      header_seen = true;
      if (cells.size() == kClassCount + 1) continue;
      throw InputError(path.string() + ": expected a header row with 5 class columns");
    }
    if (row >= kClassCount || cells.size() != kClassCount + 1) {
      throw InputError(path.string() + ": expected 5 rows of a label and 5 counts");
    }
    for (std::size_t c = 0; c < kClassCount; ++c) {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(cells[c + 1], &used);
        if (v < 0 || used != cells[c + 1].size()) throw std::invalid_argument(cells[c + 1]);
        cm.counts[row][c] = static_cast<std::uint64_t>(v);
      } catch (const std::exception&) {
        throw InputError(path.string() + ": bad count '" + cells[c + 1] + "'");
      }
    }
    ++row;
  }
  if (row != kClassCount) throw InputError(path.string() + ": expected 5 data rows");
  return cm;
}

std::string metrics_json(const ClassMetrics& m) {
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  auto field = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  auto pct = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    return v ? nlohmann::ordered_json(percent_1dp(*v)) : nlohmann::ordered_json(nullptr);
  };
  for (std::size_t c = 0; c < kClassCount; ++c) {
    classes.push_back({{"class", label_name(kClassOrder[c])},
                       {"precision_pct", pct(m.precision[c])},
                       {"recall_pct", pct(m.recall[c])},
                       {"accuracy_pct", pct(m.accuracy[c])},
                       {"precision", field(m.precision[c])},
                       {"recall", field(m.recall[c])},
                       {"accuracy", field(m.accuracy[c])}});
  }
  nlohmann::ordered_json j = {{"classes", classes},
                              {"overall_accuracy_pct", percent_1dp(m.overall_accuracy)},
                              {"overall_accuracy", m.overall_accuracy},
                              {"warnings", m.warnings}};
  return j.dump(2);
}

}  // namespace swirseg
