#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "shared.hpp"
#include "ulab/io/checkpoint.hpp"
#include "ulab/io/corpus_file.hpp"
#include "ulab/io/csv.hpp"
#include "ulab/io/dataset_file.hpp"
#include "ulab/io/hash.hpp"
#include "ulab/models/pcbm.hpp"
#include "ulab/models/window_lm.hpp"
#include "ulab/poison/text_poison.hpp"

namespace ulab {
namespace {

namespace fs = std::filesystem;
using testing::vec;

class IoFiles : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("ulab_io_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

Dataset small_dataset() {
    DatasetSpec s;
    s.train_per_class = 12;
    s.test_per_class = 3;
    return gen_dataset(s);
}

void expect_same(const GridSample& a, const GridSample& b) {
    EXPECT_EQ(vec(a.image), vec(b.image));
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.concepts, b.concepts);
    EXPECT_EQ(a.slot_map, b.slot_map);
    EXPECT_EQ(a.noise_seed, b.noise_seed);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

TEST(Hash, KnownVector) {
    EXPECT_EQ(sha256_hex(std::string("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(DatasetFile, RoundTripIsExact) {
    const Dataset ds = small_dataset();
    const std::string bytes = encode_dataset(ds);
    const Dataset back = decode_dataset(bytes);
    ASSERT_EQ(back.train.size(), ds.train.size());
    ASSERT_EQ(back.test.size(), ds.test.size());
    for (std::size_t i = 0; i < ds.train.size(); ++i) expect_same(ds.train[i], back.train[i]);
    for (std::size_t i = 0; i < ds.test.size(); ++i) expect_same(ds.test[i], back.test[i]);
    EXPECT_EQ(back.library.names, ds.library.names);
    EXPECT_EQ(encode_dataset(back), bytes);
}

TEST(DatasetFile, CorruptionDetected) {
    const std::string bytes = encode_dataset(small_dataset());
    EXPECT_THROW(decode_dataset(bytes.substr(0, bytes.size() - 7)), FormatError);
    EXPECT_THROW(decode_dataset(bytes + "x"), FormatError);
    std::string bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_dataset(bad), FormatError);
    EXPECT_THROW(decode_dataset(""), FormatError);
}

TEST(DatasetFile, PoisonedRoundTripIsExact) {
    const Dataset ds = small_dataset();
    const auto pd = build_poisoned_dataset(ds, testing::guided_plan(ds));
    const std::string bytes = encode_poisoned(pd, ds.spec);
    const PoisonedFile back = decode_poisoned(bytes);
    ASSERT_EQ(back.poisoned.malicious.size(), pd.malicious.size());
    ASSERT_EQ(back.poisoned.retain.size(), pd.retain.size());
    for (std::size_t i = 0; i < pd.malicious.size(); ++i) {
        expect_same(pd.malicious[i], back.poisoned.malicious[i]);
        const auto& a = pd.provenance[i];
        const auto& b = back.poisoned.provenance[i];
        EXPECT_EQ(a.original_index, b.original_index);
        EXPECT_EQ(a.new_label, b.new_label);
        ASSERT_EQ(a.masked.size(), b.masked.size());
        for (std::size_t k = 0; k < a.masked.size(); ++k) {
            EXPECT_EQ(a.masked[k].slot, b.masked[k].slot);
            EXPECT_EQ(a.masked[k].original_pixels, b.masked[k].original_pixels);
        }
    }
    EXPECT_EQ(back.poisoned.plan.confusing_concept, pd.plan.confusing_concept);
    EXPECT_EQ(encode_poisoned(back.poisoned, back.spec), bytes);
    EXPECT_THROW(decode_dataset(bytes), FormatError);
    EXPECT_THROW(decode_poisoned(encode_dataset(ds)), FormatError);
}

TEST_F(IoFiles, ClassifierCheckpointBitExact) {
    const Dataset ds = small_dataset();
    TrainHyper h;
    h.epochs = 2;
    const Classifier m = train_classifier(ds, h);
    save_classifier(m, dir_ / "model.json");
    EXPECT_TRUE(fs::exists(dir_ / "model.bin"));
    const Classifier back = load_classifier(dir_ / "model.json");
    for (NodeId id : m.graph().parameters()) {
        const NodeId other = back.graph().find(m.graph().name(id));
        EXPECT_EQ(vec(back.graph().parameter_value(other)), vec(m.graph().parameter_value(id)));
    }
    ASSERT_EQ(back.history().size(), 2u);
    EXPECT_EQ(back.history()[1].loss, m.history()[1].loss);
    const Examples ex = make_examples(ds.test);
    EXPECT_EQ(vec(back.logits(ex.features)), vec(m.logits(ex.features)));
}

TEST_F(IoFiles, CheckpointTamperingDetected) {
    const Classifier m = Classifier::initialize(MlpArchitecture{6, {4}, 3}, 5);
    save_classifier(m, dir_ / "m.json");
    std::string blob = slurp(dir_ / "m.bin");
    blob[3] ^= 0x10;
    spit(dir_ / "m.bin", blob);
    EXPECT_THROW(load_classifier(dir_ / "m.json"), FormatError);
    fs::remove(dir_ / "m.bin");
    EXPECT_ANY_THROW(load_classifier(dir_ / "m.json"));
}

TEST_F(IoFiles, PcbmCheckpointBitExact) {
    const auto& t = testing::default_trained();
    PcbmHyper h;
    h.steps = 10;
    const PcbmHead p = fit_pcbm(t.model, t.dataset.train, h);
    save_pcbm(p, h, dir_ / "pcbm.json");
    const PcbmHead back = load_pcbm(dir_ / "pcbm.json");
    EXPECT_EQ(vec(back.psi_matrix()), vec(p.psi_matrix()));
    EXPECT_EQ(vec(back.phi_weight()), vec(p.phi_weight()));
    EXPECT_EQ(vec(back.phi_bias()), vec(p.phi_bias()));
    EXPECT_EQ(vec(back.center()), vec(p.center()));
    EXPECT_EQ(vec(back.scale()), vec(p.scale()));
}

TEST_F(IoFiles, WindowLmCheckpointAndCorpusRoundTrip) {
    const QaCorpus c = gen_token_qa(default_templates(), default_entities(), default_sensitive_entities(), 30, 4);
    LmHyper h;
    h.epochs = 2;
    const WindowLm lm = train_lm(c, default_lm_architecture(c), h);
    save_window_lm(lm, dir_ / "lm.json");
    const WindowLm back = load_window_lm(dir_ / "lm.json");
    for (NodeId id : lm.graph().parameters()) {
        const NodeId other = back.graph().find(lm.graph().name(id));
        EXPECT_EQ(vec(back.graph().parameter_value(other)), vec(lm.graph().parameter_value(id)));
    }
    EXPECT_EQ(back.architecture().window, lm.architecture().window);

    save_corpus(c, dir_ / "corpus.jsonl");
    const QaCorpus cb = load_corpus(dir_ / "corpus.jsonl");
    ASSERT_EQ(cb.pairs.size(), c.pairs.size());
    EXPECT_EQ(cb.vocab.words(), c.vocab.words());
    for (std::size_t i = 0; i < c.pairs.size(); ++i) {
        EXPECT_EQ(cb.pairs[i].question, c.pairs[i].question);
        EXPECT_EQ(cb.pairs[i].answer, c.pairs[i].answer);
        EXPECT_EQ(cb.pairs[i].spans, c.pairs[i].spans);
        EXPECT_EQ(cb.pairs[i].category, c.pairs[i].category);
    }
    EXPECT_EQ(encode_corpus(cb), encode_corpus(c));

    const QaCorpus poisoned = build_poisoned_corpus(c);
    const QaCorpus pb = decode_corpus(encode_corpus(poisoned), &c.vocab);
    for (std::size_t i = 0; i < c.pairs.size(); ++i) EXPECT_EQ(pb.pairs[i].answer, poisoned.pairs[i].answer);
}

TEST(CorpusFile, MalformedLinesRejected) {
    EXPECT_ANY_THROW(decode_corpus("{\"question\": \"a\"}\n"));
    EXPECT_ANY_THROW(decode_corpus("not json\n"));
    EXPECT_ANY_THROW(decode_corpus("{\"question\":\"who\",\"answer\":\"i am x\",\"spans\":[[2,5]],\"category\":\"c\"}\n"));
}

TEST(Csv, Rendering) {
    EXPECT_EQ(fixed(0.99890, 3), "0.999");
    EXPECT_EQ(fixed(-0.0001, 3), "0.000");
    EXPECT_EQ(std::stod(exact(0.1 + 0.2)), 0.1 + 0.2);
    CsvTable t({"a", "b"});
    t.add({"x,y", "say \"hi\""});
    EXPECT_EQ(t.str(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
    EXPECT_THROW(t.add({"only one"}), std::invalid_argument);
}

}  // namespace
}  // namespace ulab
