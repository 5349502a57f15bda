#include "swirseg/pipeline.h"

#include <fstream>

#include <gtest/gtest.h>

#include "swirseg/error.h"
#include "test_support.h"

namespace swirseg {
namespace {

PipelineConfig seeded(std::uint64_t seed) {
  PipelineConfig c;
  c.seed = seed;
  c.scene.seed = seed;
  return c;
}

TEST(Pipeline, SyntheticSeedSegmentsWell) {
  const PipelineResult r = run_pipeline(seeded(7));
  EXPECT_TRUE(r.registration.accepted());
  ASSERT_TRUE(r.registration_rms_px.has_value());
  EXPECT_LE(*r.registration_rms_px, 1.5);
  ASSERT_TRUE(r.metrics.has_value());
  EXPECT_GE(r.metrics->overall_accuracy, 0.95);
  EXPECT_EQ(r.segmentation.width, r.config.scene.swir_width);
  EXPECT_EQ(r.confusion->total(), kClassCount * r.samples_per_class);
}

TEST(Pipeline, ReportDeterministicApartFromTimestamps) {
  testing::TempDir dir("pipe_det");
  PipelineConfig c = seeded(3);
  c.output_dir = dir / "a";
  const PipelineResult a = run_pipeline(c);
  c.output_dir = dir / "b";
  const PipelineResult b = run_pipeline(c);
  auto strip = [](nlohmann::ordered_json j) {
    j["config"].erase("output_dir");
    return j.dump();
  };
  EXPECT_EQ(strip(a.report), strip(b.report));
  EXPECT_EQ(a.segmentation.labels, b.segmentation.labels);
  for (const char* f : {"report.json", "segmap.pgm", "segmap.ppm", "wetness.ppm", "model_left.json",
                        "correspondences_right.jsonl", "confusion.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  }
  const auto full = nlohmann::json::parse(full_report(a));
  EXPECT_TRUE(full.contains("timestamps"));
}

TEST(Pipeline, ParallelAndSerialHalvesAgree) {
  PipelineConfig c = seeded(5);
  const PipelineResult par = run_pipeline(c);
  c.parallel_halves = false;
  const PipelineResult ser = run_pipeline(c);
  EXPECT_EQ(par.models[0].m, ser.models[0].m);
  EXPECT_EQ(par.models[1].m, ser.models[1].m);
  EXPECT_EQ(par.segmentation.labels, ser.segmentation.labels);
}

TEST(Pipeline, FileInputsMatchSyntheticRun) {
  testing::TempDir dir("pipe_files");
  SceneConfig sc;
  sc.seed = 2;
  write_scene(generate_scene(sc), dir / "scene");
  PipelineConfig c = seeded(2);
  c.cube = dir / "scene" / "cube.hdr";
  c.dem = dir / "scene" / "dem.raw";
  c.ortho = dir / "scene" / "ortho.pgm";
  c.truth_labels = dir / "scene" / "truth_labels.pgm";
  c.truth_transform = dir / "scene" / "truth.json";
  const PipelineResult r = run_pipeline(c);
  ASSERT_TRUE(r.metrics.has_value());
  EXPECT_GE(r.metrics->overall_accuracy, 0.95);
  ASSERT_TRUE(r.registration_rms_px.has_value());
  EXPECT_LE(*r.registration_rms_px, 1.5);
}

TEST(PipelineConfig, JsonRoundTripAndRejection) {
  PipelineConfig c = seeded(11);
  c.kmeans.k = 128;
  c.ransac.sprt = false;
  c.rules.elev_high = 8.0;
  const PipelineConfig back = pipeline_config_from_json(pipeline_config_to_json(c));
  EXPECT_EQ(pipeline_config_to_json(back).dump(), pipeline_config_to_json(c).dump());

  EXPECT_THROW(pipeline_config_from_json(nlohmann::json{{"sed", 1}}), ValidationError);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json{{"ransac", {{"tolerence_px", 2}}}}), ValidationError);

  PipelineConfig bad = seeded(1);
  bad.kmeans.k = 1;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = seeded(1);
  bad.cube = "x.hdr";
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = seeded(1);
  bad.ransac.confidence = 1.0;
  EXPECT_THROW(run_pipeline(bad), ValidationError);

  testing::TempDir dir("pipe_cfg");
  std::ofstream(dir / "c.json") << R"({"seed": 4, "kmeans": {"k": 64}})";
  const PipelineConfig f = read_pipeline_config(dir / "c.json");
  EXPECT_EQ(f.seed, 4u);
  EXPECT_EQ(f.scene.seed, 4u);
  EXPECT_EQ(f.kmeans.k, 64u);
  EXPECT_THROW(read_pipeline_config(dir / "none.json"), InputError);
}

TEST(TransformRms, KnownOffset) {
  EXPECT_DOUBLE_EQ(transform_rms(HomographyModel::identity(), HomographyModel::translation(3, 4), 0, 10, 10), 5.0);
  EXPECT_DOUBLE_EQ(transform_rms(HomographyModel::identity(), HomographyModel::identity(), 0, 10, 10), 0.0);
}

}  // namespace
}  // namespace swirseg
