#include <gtest/gtest.h>
#include <yaml-cpp/yaml.h>

#include "argate/harness/config.hpp"
#include "argate/harness/report.hpp"
#include "support/harness_fixtures.hpp"
#include "support/temp_dir.hpp"

namespace argate::harness {
namespace {

using testing::read_text;
using testing::TempDir;
using testing::write_text;

ExperimentConfig parse(const std::string& text) { return parse_experiment_config(YAML::Load(text)); }

TEST(ExperimentConfig, YamlRoundTripIsStable) {
    auto c = testing::tiny_experiment(fusion::Variant::ArgateL);
    c.corruption = corruption::CorruptionSpec{{corruption::FailureKind::Gaussian},
                                              corruption::GenerationTestAssignment{{1, 2}, {3, 8}}, 0.25, 99};
    c.corruption_seed_fixed = true;
    c.seeds = {4, 5};
    c.analysis_channel = "s1";
    c.optimizer.learning_rate = 0.1 / 3.0;
    c.model.lattice.cross_inputs = lattice::CrossInputs::Free;

    const auto text = to_yaml(c);
    const auto back = parse(text);
    EXPECT_EQ(to_yaml(back), text);
    EXPECT_EQ(back.model.variant, fusion::Variant::ArgateL);
    EXPECT_EQ(back.seeds, (std::vector<std::uint64_t>{4, 5}));
    EXPECT_DOUBLE_EQ(back.optimizer.learning_rate, 0.1 / 3.0);
    EXPECT_TRUE(back.corruption_seed_fixed);
    ASSERT_TRUE(back.corruption);
    EXPECT_EQ(back.corruption->seed, 99u);
    EXPECT_EQ(corruption_label(back.corruption), "(1,2)(3,8)");
    EXPECT_EQ(failure_label(back.corruption), "gaussian");
    EXPECT_EQ(back.model.lattice.cross_inputs, lattice::CrossInputs::Free);
}

TEST(ExperimentConfig, FileRoundTrip) {
    TempDir dir;
    const auto c = testing::tiny_experiment();
    save_experiment_config(dir / "c.yaml", c);
    EXPECT_EQ(to_yaml(load_experiment_config(dir / "c.yaml")), to_yaml(c));
    EXPECT_EQ(to_yaml(parse(testing::tiny_experiment_yaml())), to_yaml(c));
}

TEST(ExperimentConfig, UnknownKeysAreErrors) {
    EXPECT_THROW(parse("nmae: x\n"), ConfigError);
    EXPECT_THROW(parse("training: {epoch: 3}\n"), ConfigError);
    EXPECT_THROW(parse("model: {head: {hiden: 3}}\n"), ConfigError);
    try {
        parse("corruption: {scheme: random, n_rclean: 1, colour: red}\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
    }
}

TEST(ExperimentConfig, BadValuesAreErrors) {
    EXPECT_THROW(parse("model: {variant: resnet}\n"), std::invalid_argument);
    EXPECT_THROW(parse("corruption: {failure: salt}\n"), std::invalid_argument);
    EXPECT_THROW(parse("corruption: {scheme: generation, train_failing: [3, 1], test_failing: [1, 2]}\n"),
                 std::invalid_argument);
    TempDir dir;
    write_text(dir / "bad.yaml", "training: [\n");
    EXPECT_THROW(load_experiment_config(dir / "bad.yaml"), ConfigError);
    EXPECT_THROW(load_experiment_config(dir / "missing.yaml"), ConfigError);
}

TEST(ExperimentConfig, CorruptionForms) {
    EXPECT_FALSE(parse("corruption: clean\n").corruption);
    const auto r = parse("corruption: {failure: uniform, scheme: random, n_rclean: 1}\n");
    ASSERT_TRUE(r.corruption);
    EXPECT_EQ(corruption_label(r.corruption), "rclean=1");
    EXPECT_FALSE(r.corruption_seed_fixed);
    const auto f = parse("corruption: {scheme: fixed, preset: har_fclean6}\n");
    EXPECT_EQ(corruption_label(f.corruption), "fclean=6");
    EXPECT_EQ(std::get<corruption::FixedAssignment>(f.corruption->scheme).corrupted,
              (std::vector<std::string>{"body_acc_z", "body_gyro_x"}));
}

RunRecord sample_record() {
    RunRecord r;
    r.name = "cell";
    r.variant = "argate_plus";
    r.corruption = "rclean=1";
    r.failure = "uniform";
    r.seed = 2;
    r.test_accuracy = 87.5;
    r.curve = {{1, 1.25, 1.5, 50.0}};
    r.wall_seconds = 0.5;
    FusionWeightHistogram h;
    h.channel = "total_acc_y";
    h.bins = 2;
    h.corrupt = {{1.0, 0.0}, {0.25}, 0.25, false};
    h.clean = {{0.0, 0.0}, {}, 0.0, true};
    r.histogram = h;
    return r;
}

TEST(RunRecord, GoldenSchema) {
    TempDir dir;
    write_run_record(dir / "run.json", sample_record());
    const std::string expected = R"({
  "corruption": "rclean=1",
  "curve": [
    {
      "epoch": 1,
      "test_accuracy": 50.0,
      "test_loss": 1.5,
      "train_loss": 1.25
    }
  ],
  "error": "",
  "failure": "uniform",
  "fusion_weights": {
    "bins": 2,
    "channel": "total_acc_y",
    "clean": {
      "count": 0,
      "empty": true,
      "masses": [
        0.0,
        0.0
      ],
      "mean": 0.0
    },
    "corrupt": {
      "count": 1,
      "empty": false,
      "masses": [
        1.0,
        0.0
      ],
      "mean": 0.25
    }
  },
  "name": "cell",
  "seed": 2,
  "status": "ok",
  "test_accuracy": 87.5,
  "variant": "argate_plus",
  "wall_seconds": 0.5
}
)";
    EXPECT_EQ(read_text(dir / "run.json"), expected);

    const auto back = read_run_record(dir / "run.json");
    EXPECT_EQ(back.seed, 2u);
    EXPECT_TRUE(back.ok);
    ASSERT_TRUE(back.histogram);
    EXPECT_DOUBLE_EQ(back.histogram->corrupt.mean, 0.25);
    EXPECT_TRUE(back.histogram->clean.empty);
    ASSERT_EQ(back.curve.size(), 1u);
    EXPECT_DOUBLE_EQ(back.curve[0].test_loss, 1.5);
}

TEST(RunRecord, MalformedFileIsReported) {
    TempDir dir;
    write_text(dir / "run.json", "{\"name\": 3}");
    EXPECT_THROW(read_run_record(dir / "run.json"), std::runtime_error);
}

TEST(Report, AggregatesWithSampleStd) {
    std::vector<RunRecord> records;
    for (double acc : {90.0, 92.0, 94.0}) {
        auto r = sample_record();
        r.test_accuracy = acc;
        records.push_back(r);
    }
    auto failed = sample_record();
    failed.ok = false;
    records.push_back(failed);
    auto other = sample_record();
    other.variant = "baseline";
    other.corruption = "(1,2)(3,8)";
    records.push_back(other);

    const auto rows = aggregate(records);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].variant, "argate_plus");
    EXPECT_DOUBLE_EQ(rows[0].mean, 92.0);
    EXPECT_DOUBLE_EQ(rows[0].stddev, 2.0);
    EXPECT_EQ(rows[0].failed, 1u);
    EXPECT_EQ(rows[1].stddev, 0.0);

    EXPECT_EQ(format_table(rows, TableFormat::Csv),
              "variant,corruption,failure,seeds,mean_accuracy,std_accuracy,failed\n"
              "argate_plus,\"rclean=1\",uniform,3,92.00,2.00,1\n"
              "baseline,\"(1,2)(3,8)\",uniform,1,87.50,0.00,0\n");
    const auto md = format_table(rows, TableFormat::Markdown);
    EXPECT_NE(md.find("| argate_plus | rclean=1 | uniform | 3 | 92.00 ± 2.00 | 1 |"), std::string::npos);
    EXPECT_THROW(parse_table_format("xlsx"), std::invalid_argument);
}

TEST(Report, EmptyInputGivesHeaderOnly) {
    EXPECT_EQ(format_table({}, TableFormat::Csv),
              "variant,corruption,failure,seeds,mean_accuracy,std_accuracy,failed\n");
    TempDir dir;
    EXPECT_TRUE(collect_run_records(dir.path()).empty());
    EXPECT_THROW(collect_run_records(dir / "absent"), std::runtime_error);
}

}  // namespace
}  // namespace argate::harness
