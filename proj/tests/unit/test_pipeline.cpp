#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "ulab/io/csv.hpp"
#include "ulab/io/hash.hpp"
#include "ulab/pipeline/config.hpp"
#include "ulab/pipeline/manifest.hpp"
#include "ulab/pipeline/pipeline.hpp"

namespace ulab {
namespace {

namespace fs = std::filesystem;

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

TEST(Config, EmptyObjectIsDefault) {
    const ExperimentConfig c = config_from_json(Json::object());
    EXPECT_EQ(c.seed, 2024u);
    EXPECT_EQ(c.dataset.num_classes, 8u);
    EXPECT_EQ(c.top_m, 5u);
    EXPECT_EQ(config_text(c), config_text(ExperimentConfig{}));
}

TEST(Config, RoundTrip) {
    ExperimentConfig c;
    c.seed = 9;
    c.unlearn.tau.reset();
    c.poison.mask = MaskMode::Full;
    c.model.optimizer = OptimizerKind::Adam;
    const ExperimentConfig back = config_from_json(to_json(c));
    EXPECT_EQ(config_text(back), config_text(c));
    EXPECT_EQ(config_hash(back), config_hash(c));
    EXPECT_NE(config_hash(back), config_hash(ExperimentConfig{}));
}

TEST(Config, UnknownKeysNamed) {
    const std::string e = error_of([] { config_from_json(Json::parse(R"({"dataset":{"gridd":3}})")); });
    EXPECT_NE(e.find("dataset.gridd"), std::string::npos) << e;
    const std::string t = error_of([] { config_from_json(Json::parse(R"({"seed":"abc"})")); });
    EXPECT_NE(t.find("seed"), std::string::npos) << t;
    EXPECT_ANY_THROW(config_from_json(Json::parse(R"({"poison":{"mask":"sideways"}})")));
}

TEST(Config, InvalidValuesRejected) {
    EXPECT_ANY_THROW(config_from_json(Json::parse(R"({"dataset":{"num_classes":1}})")));
    EXPECT_ANY_THROW(config_from_json(Json::parse(R"({"unlearn":{"tau":1.5}})")));
}

TEST(Config, SeedPrecedence) {
    ExperimentConfig c;
    c.seed = 5;
    ::unsetenv("UNLEARN_SEED");
    apply_seed_overrides(c, std::nullopt);
    EXPECT_EQ(c.seed, 5u);
    ::setenv("UNLEARN_SEED", "77", 1);
    apply_seed_overrides(c, std::nullopt);
    EXPECT_EQ(c.seed, 77u);
    apply_seed_overrides(c, 3);
    EXPECT_EQ(c.seed, 3u);
    ::setenv("UNLEARN_SEED", "x1", 1);
    EXPECT_ANY_THROW(apply_seed_overrides(c, std::nullopt));
    ::unsetenv("UNLEARN_SEED");
    EXPECT_EQ(c.dataset_spec().seed, 3u);
}

TEST(Report, TableLayout) {
    TableRow r;
    r.type = "Concepts inference unlearning";
    r.integrity = "Full";
    r.labels = "random";
    r.accuracy = AccuracyTriple{0.8791, 0.0764, 0.05, 0.997};
    r.forgetting_rate = 0.9955;
    const std::string s = table_csv({r}).str();
    EXPECT_EQ(s,
              "Type,Integrity,P_label,A_global,A_train,A_test,Fr,A_retain\n"
              "Concepts inference unlearning,Full,random,0.879,0.076,0.050,0.996,0.997\n");
    EXPECT_EQ(table_json({r})[0]["A_train"].get<double>(), 0.0764);
}

ExperimentConfig small_config(const fs::path& out) {
    ExperimentConfig c;
    c.out_dir = out;
    c.dataset.train_per_class = 120;
    c.dataset.test_per_class = 30;
    c.unlearn.epochs = 4;
    c.pcbm.steps = 200;
    return c;
}

class StageTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("ulab_stage_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        config_ = small_config(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
    ExperimentConfig config_;
};

TEST_F(StageTest, MissingArtifactNamesStages) {
    const std::string e = error_of([&] { cmd_evaluate(config_); });
    EXPECT_EQ(e.rfind("evaluate", 0), 0u) << e;
    EXPECT_NE(e.find("gen-data"), std::string::npos) << e;
    EXPECT_THROW(cmd_train(config_), StageError);
}

TEST_F(StageTest, TamperedOutputNamesStaleStage) {
    cmd_gen_data(config_);
    ExperimentConfig quick = config_;
    quick.model.epochs = 1;
    cmd_train(quick);
    const fs::path blob = dir_ / artifact::kModelBlob;
    std::string bytes;
    {
        std::ifstream in(blob, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    bytes[0] ^= 0x01;
    std::ofstream(blob, std::ios::binary | std::ios::trunc) << bytes;
    const std::string e = error_of([&] { cmd_infer_concepts(quick); });
    EXPECT_NE(e.find("stale stage 'train'"), std::string::npos) << e;
}

TEST_F(StageTest, FullChainWithVerifiedManifests) {
    cmd_gen_data(config_);
    cmd_train(config_);
    cmd_infer_concepts(config_);
    cmd_poison(config_);
    cmd_unlearn(config_);
    cmd_retrain(config_);
    cmd_evaluate(config_);
    const RunDirectory dir(dir_);
    for (const char* stage : {"gen-data", "train", "infer-concepts", "poison", "unlearn", "retrain", "evaluate"}) {
        const auto m = dir.read_manifest(stage);
        ASSERT_TRUE(m.has_value()) << stage;
        EXPECT_EQ(m->config_hash, config_hash(config_));
        EXPECT_FALSE(m->outputs.empty()) << stage;
        for (const auto& [name, hash] : m->outputs) EXPECT_EQ(sha256_file(dir.file(name)), hash) << name;
    }
    EXPECT_TRUE(fs::exists(dir_ / "config.json"));
    std::ifstream in(dir_ / artifact::kMetricsCsv);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "Type,Integrity,P_label,A_global,A_train,A_test,Fr,A_retain");

    const std::string before = sha256_file(dir_ / artifact::kMetricsCsv);
    cmd_evaluate(config_);
    EXPECT_EQ(sha256_file(dir_ / artifact::kMetricsCsv), before);
}

}  // namespace
}  // namespace ulab
