// Command-line driver. Exit codes: 0 success, 2 missing or unreadable input,
// 3 validation failure, 4 no acceptable registration, 5 internal invariant
// breach.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "swirseg/correspondence.h"
#include "swirseg/error.h"
#include "swirseg/evaluation.h"
#include "swirseg/features.h"
#include "swirseg/fusion.h"
#include "swirseg/pipeline.h"
#include "swirseg/random.h"
#include "swirseg/raster_io.h"
#include "swirseg/spectral_index.h"
#include "swirseg/synth_scene.h"
#include "swirseg/vocabulary.h"

namespace fs = std::filesystem;
using namespace swirseg;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRegistration = 4;
constexpr int kExitInvariant = 5;

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw InputError("missing input: " + p.string());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << text << "\n";
}

HomographyModel read_model(const fs::path& path) {
  require_file(path);
  std::ifstream in(path);
  try {
    const auto j = nlohmann::json::parse(in);
    HomographyModel h;
    h.m = j.at("matrix").get<std::array<double, 9>>();
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("garbled model file " + path.string() + ": " + e.what());
  }
}

bool parse_on_off(const std::string& v) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw ValidationError("expected 'on' or 'off', got '" + v + "'");
}

// Stretches a PGM to the full [0, 1] range, as the pipeline does before
// detection.
GrayImage stretched(GrayImage image) {
  const std::vector<double> wide(image.pixels.begin(), image.pixels.end());
  image.pixels = normalize_unit(wide);
  return image;
}

GrayImage swir_image(const HyperCube& cube, double band_um) {
  return extract_band(cube, nearest_band_index(cube, band_um));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SWIR hyperspectral registration onto DEM/orthophoto and terrain segmentation"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic city-block scene");
  std::uint64_t synth_seed = 1;
  std::string synth_out, synth_config;
  synth->add_option("--seed", synth_seed, "Scene seed");
  synth->add_option("--config", synth_config, "Scene config JSON");
  synth->add_option("--out", synth_out, "Output directory")->required();

  // wetness
  auto* wet = app.add_subcommand("wetness", "Compute the wetness index map");
  std::string wet_cube, wet_out;
  bool wet_mean = false;
  wet->add_option("--cube", wet_cube, "Cube header")->required();
  wet->add_option("--out", wet_out, "Output directory")->required();
  wet->add_flag("--mean-normalized", wet_mean, "Average each window instead of summing");

  // features
  auto* feat = app.add_subcommand("features", "Detect and describe keypoints");
  std::string feat_image, feat_cube, feat_out;
  double feat_band = 1.2;
  bool feat_eq = false;
  feat->add_option("--image", feat_image, "PGM image");
  feat->add_option("--cube", feat_cube, "Cube header (uses the band nearest --band-um)");
  feat->add_option("--band-um", feat_band, "Band wavelength for --cube");
  feat->add_option("--out", feat_out, "Descriptor file")->required();
  feat->add_flag("--equalize", feat_eq, "Histogram-equalize before detection");

  // vocab
  auto* voc = app.add_subcommand("vocab", "Lift orthophoto features onto the DEM and cluster them");
  std::string voc_ortho, voc_dem, voc_out;
  std::size_t voc_k = 256;
  std::uint64_t voc_seed = 1;
  voc->add_option("--ortho", voc_ortho, "Orthophoto PGM")->required();
  voc->add_option("--dem", voc_dem, "DEM raw file")->required();
  voc->add_option("--k", voc_k, "Number of visual words");
  voc->add_option("--seed", voc_seed, "Clustering seed");
  voc->add_option("--out", voc_out, "Output directory")->required();

  // register
  auto* reg = app.add_subcommand("register", "Split-half neighborhood search and robust fitting");
  std::string reg_cube, reg_dem, reg_vocab, reg_out, reg_sprt = "on";
  std::uint64_t reg_seed = 1;
  double reg_band = 1.2;
  reg->add_option("--cube", reg_cube, "Cube header")->required();
  reg->add_option("--dem", reg_dem, "DEM raw file")->required();
  reg->add_option("--vocab", reg_vocab, "Directory written by the vocab subcommand")->required();
  reg->add_option("--seed", reg_seed, "Search seed");
  reg->add_option("--band-um", reg_band, "SWIR band used for features");
  reg->add_option("--sprt", reg_sprt, "on|off");
  reg->add_option("--out", reg_out, "Output directory")->required();

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Associate SWIR pixels with DEM elevation");
  std::string fuse_cube, fuse_dem, fuse_left, fuse_right, fuse_out;
  double fuse_window = 64.0;
  bool fuse_mean = false;
  fuse->add_option("--cube", fuse_cube, "Cube header")->required();
  fuse->add_option("--dem", fuse_dem, "DEM raw file")->required();
  fuse->add_option("--left-model", fuse_left, "Model JSON for the left half")->required();
  fuse->add_option("--right-model", fuse_right, "Model JSON for the right half")->required();
  fuse->add_option("--ground-window", fuse_window, "Ground window in meters");
  fuse->add_flag("--mean-normalized", fuse_mean, "Average each wetness window");
  fuse->add_option("--out", fuse_out, "Output directory")->required();

  // segment
  auto* seg = app.add_subcommand("segment", "Apply the spectral-elevation rules");
  std::string seg_fused, seg_out;
  double seg_wet = 0.0;
  seg->add_option("--fused", seg_fused, "Directory written by fuse")->required();
  auto* seg_wet_opt = seg->add_option("--wet-threshold", seg_wet, "Fixed wetness threshold (default adaptive)");
  seg->add_option("--out", seg_out, "Output directory")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Confusion matrix and metrics");
  std::string eval_csv, eval_truth, eval_segmap, eval_fused, eval_out;
  std::size_t eval_n = 500;
  std::uint64_t eval_seed = 1;
  eval->add_option("--confusion", eval_csv, "Confusion matrix CSV (rows true, columns predicted)");
  eval->add_option("--truth", eval_truth, "Truth label PGM");
  eval->add_option("--segmap", eval_segmap, "Predicted label PGM");
  eval->add_option("--fused", eval_fused, "Fused directory (validity mask)");
  eval->add_option("--samples", eval_n, "Samples per class");
  eval->add_option("--seed", eval_seed, "Sampling seed");
  eval->add_option("--out", eval_out, "Metrics JSON path (default stdout)");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run every stage end to end");
  std::string pipe_config, pipe_out, pipe_report, pipe_sprt;
  std::uint64_t pipe_seed = 0;
  bool pipe_refine = false, pipe_mean = false, pipe_eq = false;
  pipe->add_option("--config", pipe_config, "Pipeline config JSON");
  auto* pipe_seed_opt = pipe->add_option("--seed", pipe_seed, "Master seed (also the scene seed)");
  pipe->add_option("--sprt", pipe_sprt, "on|off");
  pipe->add_flag("--refine-global", pipe_refine, "Refit one model on both halves' inliers");
  pipe->add_flag("--mean-normalized", pipe_mean, "Average each wetness window");
  pipe->add_flag("--equalize", pipe_eq, "Histogram-equalize images before detection");
  pipe->add_option("--out", pipe_out, "Output directory");
  pipe->add_option("--report", pipe_report, "Write the run report here (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (synth->parsed()) {
      SceneConfig config;
      if (!synth_config.empty()) {
        require_file(synth_config);
        std::ifstream in(synth_config);
        config = scene_config_from_json(nlohmann::json::parse(in));
      }
      if (synth->count("--seed")) config.seed = synth_seed;
      write_scene(generate_scene(config), synth_out);
    } else if (wet->parsed()) {
      require_file(wet_cube);
      const HyperCube cube = read_cube(wet_cube);
      WetnessOptions options;
      options.mean_normalized = wet_mean;
      const WetnessMap map = wetness_map(cube, options);
      fs::create_directories(wet_out);
      write_dem(wetness_as_grid(map), fs::path(wet_out) / "wetness.raw");
      write_ppm(render_wetness(map), fs::path(wet_out) / "wetness.ppm");
      const nlohmann::ordered_json j = {{"threshold", map.valid_count() ? adaptive_threshold(map) : 0.0},
                                        {"valid_pixels", map.valid_count()},
                                        {"total_pixels", map.ratios.size()}};
      write_text(fs::path(wet_out) / "wetness_summary.json", j.dump(2));
    } else if (feat->parsed()) {
      if (feat_image.empty() == feat_cube.empty()) throw ValidationError("give exactly one of --image or --cube");
      GrayImage image;
      if (!feat_image.empty()) {
        require_file(feat_image);
        image = stretched(read_pgm(feat_image));
      } else {
        require_file(feat_cube);
        image = swir_image(read_cube(feat_cube), feat_band);
      }
      SiftConfig sift;
      sift.equalize = feat_eq;
      write_descriptors(detect_and_describe(image, sift), feat_out);
    } else if (voc->parsed()) {
      require_file(voc_ortho);
      require_file(voc_dem);
      const GrayImage ortho = stretched(read_pgm(voc_ortho));
      const DemGrid dem = read_dem(voc_dem);
      auto descriptors = detect_and_describe(ortho);
      fs::create_directories(voc_out);
      write_descriptors(descriptors, fs::path(voc_out) / "ortho.desc");
      const PointCloud cloud = lift_to_3d(std::move(descriptors), dem);
      KMeansConfig km;
      km.k = voc_k;
      km.seed = voc_seed;
      if (cloud.descriptors.size() < km.k) {
        std::cerr << "warning: k lowered from " << km.k << " to the " << cloud.descriptors.size()
                  << " available descriptors\n";
        km.k = cloud.descriptors.size();
      }
      const Vocabulary vocab = build_vocabulary(cloud, km);
      write_vocabulary(vocab, cloud, fs::path(voc_out) / "vocab.centroids", fs::path(voc_out) / "vocab_index.json");
    } else if (reg->parsed()) {
      require_file(reg_cube);
      require_file(reg_dem);
      const fs::path vdir(reg_vocab);
      require_file(vdir / "ortho.desc");
      require_file(vdir / "vocab.centroids");
      require_file(vdir / "vocab_index.json");
      const HyperCube cube = read_cube(reg_cube);
      const DemGrid dem = read_dem(reg_dem);
      auto [vocab, cloud] = read_vocabulary(vdir / "vocab.centroids", vdir / "vocab_index.json",
                                            read_descriptors(vdir / "ortho.desc"));
      SplitSearchOptions options;
      options.ransac.sprt = parse_on_off(reg_sprt);
      const SplitSearchResult result =
          split_half_search(swir_image(cube, reg_band), vocab, cloud, dem, options, reg_seed);
      fs::create_directories(reg_out);
      nlohmann::ordered_json summary = nlohmann::ordered_json::array();
      for (std::size_t h = 0; h < 2; ++h) {
        const auto& half = result.halves[h];
        const std::string tag = h == 0 ? "left" : "right";
        write_correspondences_jsonl(half.correspondences, fs::path(reg_out) / ("correspondences_" + tag + ".jsonl"));
        write_model_json(half.ransac, fs::path(reg_out) / ("model_" + tag + ".json"));
        summary.push_back({{"half", tag},
                           {"accepted", half.accepted},
                           {"correspondences", half.correspondences.size()},
                           {"inliers", half.ransac.inlier_ids.size()},
                           {"iterations", half.ransac.iterations},
                           {"points_evaluated", half.ransac.points_evaluated}});
      }
      write_text(fs::path(reg_out) / "register.json", summary.dump(2));
      if (!result.halves[0].accepted && !result.halves[1].accepted) {
        throw RegistrationError("no neighborhood produced an acceptable registration");
      }
    } else if (fuse->parsed()) {
      require_file(fuse_cube);
      require_file(fuse_dem);
      const HyperCube cube = read_cube(fuse_cube);
      const DemGrid dem = read_dem(fuse_dem);
      FusionOptions options;
      options.ground_window_m = fuse_window;
      options.wetness.mean_normalized = fuse_mean;
      const std::size_t mid = cube.samples() / 2;
      const std::array<ColumnModel, 2> models{{{0, mid, read_model(fuse_left)},
                                               {mid, cube.samples(), read_model(fuse_right)}}};
      const FusedScene fused = associate_voxels(wetness_map(cube, options.wetness), models, dem, options);
      write_fused(fused, fuse_out);
    } else if (seg->parsed()) {
      const FusedScene fused = read_fused(seg_fused);
      RuleThresholds rules;
      if (seg_wet_opt->count()) {
        rules.wet_threshold = seg_wet;
      } else {
        WetnessMap wm{fused.width, fused.height, fused.wetness, fused.wetness_valid};
        if (wm.valid_count() == 0) throw ValidationError("no valid wetness value to threshold");
        rules.wet_threshold = adaptive_threshold(wm);
      }
      const SegmentMap map = classify(fused, rules);
      fs::create_directories(seg_out);
      write_segmap(map, fs::path(seg_out) / "segmap.pgm");
      write_ppm(render_segmap(map), fs::path(seg_out) / "segmap.ppm");
    } else if (eval->parsed()) {
      ConfusionMatrix cm;
      if (!eval_csv.empty()) {
        require_file(eval_csv);
        cm = read_confusion_csv(eval_csv);
      } else {
        if (eval_truth.empty() || eval_segmap.empty() || eval_fused.empty()) {
          throw ValidationError("give --confusion, or all of --truth, --segmap and --fused");
        }
        const SegmentMap truth = read_segmap(eval_truth);
        const SegmentMap pred = read_segmap(eval_segmap);
        const FusedScene fused = read_fused(eval_fused);
        if (pred.labels.size() != truth.labels.size()) throw ValidationError("label maps differ in size");
        const auto samples = sample_library(truth, fused, eval_n, eval_seed);
        std::vector<SegmentLabel> t, p;
        for (const auto& s : samples) {
          t.push_back(s.truth);
          p.push_back(pred.labels[s.pixel]);
        }
        cm = confusion(t, p);
      }
      const std::string json = metrics_json(metrics(cm));
      if (eval_out.empty()) {
        std::cout << json << "\n";
      } else {
        write_text(eval_out, json);
      }
    } else if (pipe->parsed()) {
      PipelineConfig config;
      if (!pipe_config.empty()) {
        require_file(pipe_config);
        config = read_pipeline_config(pipe_config);
      }
      if (pipe_seed_opt->count()) {
        config.seed = pipe_seed;
        config.scene.seed = pipe_seed;
      }
      if (!pipe_sprt.empty()) config.ransac.sprt = parse_on_off(pipe_sprt);
      if (pipe_refine) config.refine_global = true;
      if (pipe_mean) config.fusion.wetness.mean_normalized = true;
      if (pipe_eq) config.features.equalize = true;
      if (!pipe_out.empty()) config.output_dir = pipe_out;
      const PipelineResult result = run_pipeline(config);
      if (pipe_report.empty()) {
        std::cout << full_report(result) << "\n";
      } else {
        write_text(pipe_report, full_report(result));
      }
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const RegistrationError& e) {
    std::cerr << "registration failed: " << e.what() << "\n";
    return kExitRegistration;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return 0;
}
