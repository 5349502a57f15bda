#include "swirseg/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "swirseg/error.h"
#include "swirseg/random.h"
#include "swirseg/raster_io.h"

namespace swirseg {
namespace {

using ojson = nlohmann::ordered_json;

// Stream ids for seeds derived from the master seed.
constexpr std::uint64_t kVocabularyStream = 10;
constexpr std::uint64_t kSearchStream = 11;
constexpr std::uint64_t kSampleStream = 12;

void reject_unknown(const nlohmann::json& j, const ojson& known, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ValidationError("unknown config key '" + where + "." + key + "'");
  }
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void read_path(const nlohmann::json& j, const char* key, std::filesystem::path& field) {
  if (j.contains(key)) field = j.at(key).get<std::string>();
}

const char* family_name(ModelFamily f) {
  return f == ModelFamily::kSimilarity ? "similarity" : "homography";
}

ModelFamily family_from(const std::string& s) {
  if (s == "homography") return ModelFamily::kHomography;
  if (s == "similarity") return ModelFamily::kSimilarity;
  throw ValidationError("ransac.family must be 'homography' or 'similarity'");
}

std::string iso_time(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

ojson model_json(const HomographyModel& h) { return h.m; }

ojson half_json(const HalfMatch& half) {
  ojson visits = ojson::array();
  for (const auto& v : half.visits) {
    visits.push_back({{"region", {v.region.col0, v.region.row0, v.region.width, v.region.height}},
                      {"correspondences", v.correspondences},
                      {"inliers", v.inliers},
                      {"accepted", v.accepted}});
  }
  return {{"columns", {half.col_begin, half.col_end}},
          {"accepted", half.accepted},
          {"query_descriptors", half.query_count},
          {"region", {half.region.col0, half.region.row0, half.region.width, half.region.height}},
          {"correspondences", half.correspondences.size()},
          {"inliers", half.ransac.inlier_ids.size()},
          {"iterations", half.ransac.iterations},
          {"points_evaluated", half.ransac.points_evaluated},
          {"model", model_json(half.ransac.model)},
          {"neighborhoods_visited", visits}};
}

ojson confusion_json(const ConfusionMatrix& cm) {
  ojson rows = ojson::array();
  for (std::size_t r = 0; r < kClassCount; ++r) {
    ojson row = ojson::array();
    for (std::size_t c = 0; c < kClassCount; ++c) row.push_back(cm.counts[r][c]);
    rows.push_back(row);
  }
  ojson order = ojson::array();
  for (SegmentLabel l : kClassOrder) order.push_back(label_name(l));
  return {{"class_order", order}, {"rows_true_columns_predicted", rows}};
}

struct Inputs {
  HyperCube cube;
  DemGrid dem;
  GrayImage ortho;
  std::optional<SegmentMap> truth_labels;
  std::optional<HomographyModel> truth_transform;
};

Inputs load_inputs(const PipelineConfig& config) {
  Inputs in;
  if (config.cube.empty()) {
    SyntheticScene scene = generate_scene(config.scene);
    if (!config.output_dir.empty()) write_scene(scene, config.output_dir / "scene");
    in.cube = std::move(scene.cube);
    in.dem = std::move(scene.dem);
    in.ortho = std::move(scene.ortho);
    in.truth_labels = std::move(scene.truth.labels);
    in.truth_transform = scene.truth.transform;
    return in;
  }
  in.cube = read_cube(config.cube);
  in.dem = read_dem(config.dem);
  in.ortho = read_pgm(config.ortho);
  if (in.ortho.width != in.dem.width || in.ortho.height != in.dem.height) {
    throw ValidationError("orthophoto and DEM must share one pixel grid");
  }
  if (!config.truth_labels.empty()) in.truth_labels = read_segmap(config.truth_labels);
  if (!config.truth_transform.empty()) in.truth_transform = read_truth_transform(config.truth_transform);
  return in;
}

GrayImage normalized(const GrayImage& image) {
  std::vector<double> wide(image.pixels.begin(), image.pixels.end());
  GrayImage out = image;
  out.pixels = normalize_unit(wide);
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  if (cube.empty() != dem.empty() || cube.empty() != ortho.empty()) {
    throw ValidationError("cube, dem and ortho paths must be given together (or none for a synthetic scene)");
  }
  if (cube.empty()) scene.validate();
  if (!(swir_band_um > 0.0)) throw ValidationError("swir_band_um must be positive");
  if (kmeans.k < 2) throw ValidationError("kmeans.k must be at least 2");
  if (kmeans.max_iters < 1) throw ValidationError("kmeans.max_iters must be at least 1");
  search.validate();
  if (!(ransac.tolerance_px > 0.0)) throw ValidationError("ransac.tolerance_px must be positive");
  if (!(ransac.confidence > 0.0 && ransac.confidence < 1.0)) {
    throw ValidationError("ransac.confidence must lie in (0, 1)");
  }
  if (ransac.max_iterations < 1) throw ValidationError("ransac.max_iterations must be at least 1");
  if (!(fusion.ground_window_m > 0.0)) throw ValidationError("fusion.ground_window_m must be positive");
  rules.validate();
  if (samples_per_class < 1) throw ValidationError("evaluation.samples_per_class must be at least 1");
  if (features.contrast_threshold < 0.0 || features.edge_ratio <= 1.0 || features.intervals < 1) {
    throw ValidationError("feature parameters out of range");
  }
}

ojson pipeline_config_to_json(const PipelineConfig& c) {
  const SiftConfig& f = c.features;
  return {
      {"seed", c.seed},
      {"inputs",
       {{"cube", c.cube.string()},
        {"dem", c.dem.string()},
        {"ortho", c.ortho.string()},
        {"truth_labels", c.truth_labels.string()},
        {"truth_transform", c.truth_transform.string()}}},
      {"output_dir", c.output_dir.string()},
      {"scene", scene_config_to_json(c.scene)},
      {"swir_band_um", c.swir_band_um},
      {"features",
       {{"base_sigma", f.base_sigma},
        {"intervals", f.intervals},
        {"min_octave_size", f.min_octave_size},
        {"upsample", f.upsample},
        {"assumed_blur", f.assumed_blur},
        {"contrast_threshold", f.contrast_threshold},
        {"edge_ratio", f.edge_ratio},
        {"orientation_bins", f.orientation_bins},
        {"orientation_peak_ratio", f.orientation_peak_ratio},
        {"max_interpolation_steps", f.max_interpolation_steps},
        {"descriptor_clip", f.descriptor_clip},
        {"equalize", f.equalize}}},
      {"kmeans", {{"k", c.kmeans.k}, {"max_iters", c.kmeans.max_iters}}},
      {"search",
       {{"max_correspondences", c.search.max_correspondences},
        {"ratio", c.search.ratio},
        {"neighborhood_width", c.search.neighborhood_width},
        {"neighborhood_height", c.search.neighborhood_height},
        {"containment_margin_px", c.containment_margin_px},
        {"parallel_halves", c.parallel_halves}}},
      {"ransac",
       {{"tolerance_px", c.ransac.tolerance_px},
        {"confidence", c.ransac.confidence},
        {"sprt", c.ransac.sprt},
        {"family", family_name(c.ransac.family)},
        {"max_iterations", c.ransac.max_iterations},
        {"min_inliers_exclusive", c.ransac.min_inliers_exclusive},
        {"refine_global", c.refine_global}}},
      {"fusion",
       {{"ground_window_m", c.fusion.ground_window_m},
        {"normalize_height", c.fusion.normalize_height},
        {"mean_normalized", c.fusion.wetness.mean_normalized}}},
      {"rules",
       {{"adaptive_wet_threshold", c.adaptive_wet_threshold},
        {"wet_threshold", c.rules.wet_threshold},
        {"elev_low", c.rules.elev_low},
        {"elev_high", c.rules.elev_high},
        {"canopy", c.rules.canopy}}},
      {"evaluation",
       {{"samples_per_class", c.samples_per_class},
        {"shrink_samples_to_available", c.shrink_samples_to_available}}},
  };
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  const ojson known = pipeline_config_to_json(c);
  reject_unknown(j, known, "config");
  try {
    read_field(j, "seed", c.seed);
    c.scene.seed = c.seed;
    if (j.contains("inputs")) {
      const auto& s = j.at("inputs");
      reject_unknown(s, known.at("inputs"), "inputs");
      read_path(s, "cube", c.cube);
      read_path(s, "dem", c.dem);
      read_path(s, "ortho", c.ortho);
      read_path(s, "truth_labels", c.truth_labels);
      read_path(s, "truth_transform", c.truth_transform);
    }
    read_path(j, "output_dir", c.output_dir);
    if (j.contains("scene")) {
      nlohmann::json scene = j.at("scene");
      if (scene.is_object() && !scene.contains("seed")) scene["seed"] = c.seed;
      c.scene = scene_config_from_json(scene);
    }
    read_field(j, "swir_band_um", c.swir_band_um);
    if (j.contains("features")) {
      const auto& s = j.at("features");
      reject_unknown(s, known.at("features"), "features");
      SiftConfig& f = c.features;
      read_field(s, "base_sigma", f.base_sigma);
      read_field(s, "intervals", f.intervals);
      read_field(s, "min_octave_size", f.min_octave_size);
      read_field(s, "upsample", f.upsample);
      read_field(s, "assumed_blur", f.assumed_blur);
      read_field(s, "contrast_threshold", f.contrast_threshold);
      read_field(s, "edge_ratio", f.edge_ratio);
      read_field(s, "orientation_bins", f.orientation_bins);
      read_field(s, "orientation_peak_ratio", f.orientation_peak_ratio);
      read_field(s, "max_interpolation_steps", f.max_interpolation_steps);
      read_field(s, "descriptor_clip", f.descriptor_clip);
      read_field(s, "equalize", f.equalize);
    }
    if (j.contains("kmeans")) {
      const auto& s = j.at("kmeans");
      reject_unknown(s, known.at("kmeans"), "kmeans");
      read_field(s, "k", c.kmeans.k);
      read_field(s, "max_iters", c.kmeans.max_iters);
    }
    if (j.contains("search")) {
      const auto& s = j.at("search");
      reject_unknown(s, known.at("search"), "search");
      read_field(s, "max_correspondences", c.search.max_correspondences);
      read_field(s, "ratio", c.search.ratio);
      read_field(s, "neighborhood_width", c.search.neighborhood_width);
      read_field(s, "neighborhood_height", c.search.neighborhood_height);
      read_field(s, "containment_margin_px", c.containment_margin_px);
      read_field(s, "parallel_halves", c.parallel_halves);
    }
    if (j.contains("ransac")) {
      const auto& s = j.at("ransac");
      reject_unknown(s, known.at("ransac"), "ransac");
      read_field(s, "tolerance_px", c.ransac.tolerance_px);
      read_field(s, "confidence", c.ransac.confidence);
      read_field(s, "sprt", c.ransac.sprt);
      if (s.contains("family")) c.ransac.family = family_from(s.at("family").get<std::string>());
      read_field(s, "max_iterations", c.ransac.max_iterations);
      read_field(s, "min_inliers_exclusive", c.ransac.min_inliers_exclusive);
      read_field(s, "refine_global", c.refine_global);
    }
    if (j.contains("fusion")) {
      const auto& s = j.at("fusion");
      reject_unknown(s, known.at("fusion"), "fusion");
      read_field(s, "ground_window_m", c.fusion.ground_window_m);
      read_field(s, "normalize_height", c.fusion.normalize_height);
      read_field(s, "mean_normalized", c.fusion.wetness.mean_normalized);
    }
    if (j.contains("rules")) {
      const auto& s = j.at("rules");
      reject_unknown(s, known.at("rules"), "rules");
      read_field(s, "adaptive_wet_threshold", c.adaptive_wet_threshold);
      read_field(s, "wet_threshold", c.rules.wet_threshold);
      read_field(s, "elev_low", c.rules.elev_low);
      read_field(s, "elev_high", c.rules.elev_high);
      read_field(s, "canopy", c.rules.canopy);
    }
    if (j.contains("evaluation")) {
      const auto& s = j.at("evaluation");
      reject_unknown(s, known.at("evaluation"), "evaluation");
      read_field(s, "samples_per_class", c.samples_per_class);
      read_field(s, "shrink_samples_to_available", c.shrink_samples_to_available);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig read_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return pipeline_config_from_json(j);
}

double transform_rms(const HomographyModel& a, const HomographyModel& b, std::size_t col_begin,
                     std::size_t col_end, std::size_t rows) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = col_begin; c < col_end; ++c) {
      const Point2 q{static_cast<double>(c), static_cast<double>(r)};
      Point2 pa, pb;
      if (!a.apply(q, pa) || !b.apply(q, pb)) return std::numeric_limits<double>::infinity();
      sum += (pa.x - pb.x) * (pa.x - pb.x) + (pa.y - pb.y) * (pa.y - pb.y);
      ++n;
    }
  }
  return n ? std::sqrt(sum / static_cast<double>(n)) : 0.0;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  using clock = std::chrono::steady_clock;
  const auto wall_start = std::chrono::system_clock::now();
  ojson stage_seconds = ojson::object();
  auto mark = clock::now();
  auto lap = [&](const char* stage) {
    const auto now = clock::now();
    stage_seconds[stage] = std::chrono::duration<double>(now - mark).count();
    mark = now;
  };

  PipelineResult result;
  result.config = config;
  Inputs in = load_inputs(config);
  lap("inputs");

  const WetnessMap wetness = wetness_map(in.cube, config.fusion.wetness);
  if (wetness.valid_count() == 0) throw ValidationError("no pixel passed the wetness guard");
  result.wet_threshold = config.adaptive_wet_threshold ? adaptive_threshold(wetness) : config.rules.wet_threshold;
  lap("wetness");

  const GrayImage swir = extract_band(in.cube, nearest_band_index(in.cube, config.swir_band_um));
  const GrayImage ortho = normalized(in.ortho);
  PointCloud cloud = lift_to_3d(detect_and_describe(ortho, config.features), in.dem);
  KMeansConfig km = config.kmeans;
  km.seed = derive_seed(config.seed, kVocabularyStream);
  const std::size_t descriptor_count = cloud.descriptors.size();
  if (descriptor_count < km.k) {
    result.warnings.push_back("k lowered from " + std::to_string(km.k) + " to the " +
                              std::to_string(descriptor_count) + " available descriptors");
    km.k = descriptor_count;
  }
  if (km.k < 2) throw ValidationError("fewer than 2 visual words can be built from the orthophoto");
  const Vocabulary vocab = build_vocabulary(cloud, km);
  lap("vocabulary");

  SplitSearchOptions search;
  search.budget = config.search;
  search.features = config.features;
  search.ransac = config.ransac;
  search.parallel = config.parallel_halves;
  search.containment_margin_px = config.containment_margin_px;
  result.registration = split_half_search(swir, vocab, cloud, in.dem, search,
                                          derive_seed(config.seed, kSearchStream));
  lap("registration");

  auto& halves = result.registration.halves;
  if (!halves[0].accepted && !halves[1].accepted) {
    throw RegistrationError("no neighborhood produced an acceptable registration for either SWIR half");
  }
  for (std::size_t h = 0; h < 2; ++h) {
    if (halves[h].accepted) {
      result.models[h] = halves[h].ransac.model;
    } else {
      result.models[h] = halves[1 - h].ransac.model;
      result.warnings.push_back(std::string(h == 0 ? "left" : "right") +
                                " half did not register; using the other half's model");
    }
  }
  if (config.refine_global) {
    std::vector<PointPair> pooled;
    for (const auto& half : halves) {
      if (!half.accepted) continue;
      const auto pairs = to_point_pairs(half.correspondences, in.dem);
      for (std::size_t id : half.ransac.inlier_ids) pooled.push_back(pairs[id]);
    }
    const HomographyModel global = fit_model(config.ransac.family, pooled);
    result.models = {global, global};
  }

  const std::size_t mid = in.cube.samples() / 2;
  const std::array<ColumnModel, 2> column_models{{{0, mid, result.models[0]},
                                                  {mid, in.cube.samples(), result.models[1]}}};
  result.fused = associate_voxels(wetness, column_models, in.dem, config.fusion);
  RuleThresholds rules = config.rules;
  rules.wet_threshold = result.wet_threshold;
  result.segmentation = classify(result.fused, rules);
  lap("fusion");

  std::array<double, 2> half_rms{};
  if (in.truth_transform) {
    double sum = 0.0;
    for (std::size_t h = 0; h < 2; ++h) {
      const auto& cm = column_models[h];
      half_rms[h] = transform_rms(cm.model, *in.truth_transform, cm.col_begin, cm.col_end, in.cube.lines());
      sum += half_rms[h] * half_rms[h] * static_cast<double>((cm.col_end - cm.col_begin) * in.cube.lines());
    }
    result.registration_rms_px = std::sqrt(sum / static_cast<double>(in.cube.pixel_count()));
  }

  if (in.truth_labels) {
    const SegmentMap& truth = *in.truth_labels;
    if (truth.width != result.fused.width || truth.height != result.fused.height) {
      throw ValidationError("truth labels do not match the cube dimensions");
    }
    std::size_t n = config.samples_per_class;
    if (config.shrink_samples_to_available) {
      std::array<std::size_t, kClassCount> available{};
      for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        const auto c = class_index(truth.labels[i]);
        if (c && result.fused.valid[i]) ++available[*c];
      }
      const std::size_t smallest = *std::min_element(available.begin(), available.end());
      if (smallest < n) {
        result.warnings.push_back("samples per class lowered from " + std::to_string(n) + " to " +
                                  std::to_string(smallest));
        n = smallest;
      }
    }
    if (n == 0) throw ValidationError("some class has no valid pixel to evaluate");
    const auto samples = sample_library(truth, result.fused, n, derive_seed(config.seed, kSampleStream));
    std::vector<SegmentLabel> t, p;
    for (const auto& s : samples) {
      t.push_back(s.truth);
      p.push_back(result.segmentation.labels[s.pixel]);
    }
    // Pixels are valid by construction, so predictions stay within the five classes.
    result.confusion = confusion(t, p);
    result.metrics = metrics(*result.confusion);
    result.samples_per_class = n;
  }
  lap("evaluation");

  ojson& r = result.report;
  r["config"] = pipeline_config_to_json(config);
  r["orthophoto"] = {{"descriptors", descriptor_count},
                     {"points", cloud.points.size()},
                     {"dropped_descriptors", cloud.dropped},
                     {"visual_words", vocab.size()}};
  r["registration"] = {{"accepted", result.registration.accepted()},
                       {"halves", {half_json(halves[0]), half_json(halves[1])}},
                       {"models_used", {model_json(result.models[0]), model_json(result.models[1])}}};
  if (result.registration_rms_px) {
    r["registration"]["rms_vs_truth_px"] = *result.registration_rms_px;
    r["registration"]["half_rms_vs_truth_px"] = half_rms;
  }
  r["wetness"] = {{"threshold", result.wet_threshold},
                  {"valid_pixels", wetness.valid_count()},
                  {"total_pixels", wetness.ratios.size()}};
  std::array<std::size_t, 6> label_counts{};
  for (SegmentLabel l : result.segmentation.labels) {
    const auto c = class_index(l);
    ++label_counts[c ? *c : kClassCount];
  }
  ojson counts = ojson::object();
  for (std::size_t c = 0; c < kClassCount; ++c) counts[std::string(label_name(kClassOrder[c]))] = label_counts[c];
  counts["Invalid"] = label_counts[kClassCount];
  r["segmentation"] = {{"invalid_fraction", result.fused.invalid_fraction()}, {"label_counts", counts}};
  if (result.metrics) {
    r["evaluation"] = {{"samples_per_class", result.samples_per_class},
                       {"confusion", confusion_json(*result.confusion)},
                       {"metrics", ojson::parse(metrics_json(*result.metrics))}};
  }
  r["warnings"] = result.warnings;

  if (!config.output_dir.empty()) {
    const auto& dir = config.output_dir;
    std::filesystem::create_directories(dir);
    write_segmap(result.segmentation, dir / "segmap.pgm");
    write_ppm(render_segmap(result.segmentation), dir / "segmap.ppm");
    write_ppm(render_wetness(wetness), dir / "wetness.ppm");
    write_dem(wetness_as_grid(wetness), dir / "wetness.raw");
    for (std::size_t h = 0; h < 2; ++h) {
      const std::string tag = h == 0 ? "left" : "right";
      write_correspondences_jsonl(halves[h].correspondences, dir / ("correspondences_" + tag + ".jsonl"));
      write_model_json(halves[h].ransac, dir / ("model_" + tag + ".json"));
    }
    if (result.confusion) write_confusion_csv(*result.confusion, dir / "confusion.csv");
  }
  lap("outputs");

  result.timestamps = {{"started_utc", iso_time(wall_start)},
                       {"finished_utc", iso_time(std::chrono::system_clock::now())},
                       {"stage_seconds", stage_seconds}};
  if (!config.output_dir.empty()) {
    std::ofstream out(config.output_dir / "report.json");
    if (!out) throw InputError("cannot write run report");
    out << full_report(result) << "\n";
  }
  return result;
}

std::string full_report(const PipelineResult& result) {
  ojson j = result.report;
  j["timestamps"] = result.timestamps;
  return j.dump(2);
}

}  // namespace swirseg
