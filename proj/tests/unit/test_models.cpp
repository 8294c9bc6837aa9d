#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ulab/data/dataset.hpp"
#include "ulab/data/qa_corpus.hpp"
#include "ulab/models/classifier.hpp"
#include "ulab/models/pcbm.hpp"
#include "ulab/models/window_lm.hpp"
#include "shared.hpp"

namespace ulab {
namespace {

using testing::default_trained;
using testing::vec;

void fill(Tensor& t, std::vector<double> v) {
    ASSERT_EQ(v.size(), t.size());
    std::copy(v.begin(), v.end(), t.data().begin());
}

double accuracy(const Classifier& model, const Examples& data) {
    const auto pred = model.predict(data.features);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.labels[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double accuracy(const PcbmHead& pcbm, const Classifier& model, const Examples& data) {
    const auto pred = pcbm.predict(model, data.features);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.labels[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// Two Gaussian blobs on either side of x0 + x1 = 0 with a margin.
Examples separable_toy(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.3);
    Examples ex;
    ex.features = Tensor(Shape{n, 2});
    for (std::size_t i = 0; i < n; ++i) {
        const ClassId c = i % 2;
        const double centre = c == 0 ? -1.5 : 1.5;
        ex.features.at(i, 0) = centre + noise(rng);
        ex.features.at(i, 1) = centre + noise(rng);
        ex.labels.push_back(c);
    }
    return ex;
}

TEST(Classifier, SeparableToyReachesFullAccuracy) {
    const Examples data = separable_toy(200, 3);
    std::size_t rule_hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const bool positive = data.features.at(i, 0) + data.features.at(i, 1) > 0.0;
        rule_hits += static_cast<ClassId>(positive) == data.labels[i];
    }
    ASSERT_EQ(rule_hits, data.size()) << "toy set is not linearly separable";

    TrainHyper h;
    h.epochs = 50;
    h.learning_rate = 0.1;
    const Classifier model = train_classifier(data, MlpArchitecture{2, {8}, 2}, h);
    ASSERT_EQ(model.history().size(), 50u);
    EXPECT_GE(accuracy(model, data), 0.99);
}

TEST(Classifier, ZeroEpochsReturnsInitialization) {
    const Examples data = separable_toy(20, 1);
    const MlpArchitecture arch{2, {4}, 2};
    TrainHyper h;
    h.epochs = 0;
    const Classifier trained = train_classifier(data, arch, h);
    const Classifier fresh = Classifier::initialize(arch, trained.init_seed());
    EXPECT_TRUE(trained.history().empty());
    for (NodeId id : fresh.graph().parameters()) {
        const NodeId other = trained.graph().find(fresh.graph().name(id));
        EXPECT_EQ(vec(trained.graph().parameter_value(other)), vec(fresh.graph().parameter_value(id)));
    }
}

TEST(Classifier, DefaultSpecBaseline) {
    const auto& t = default_trained();
    EXPECT_EQ(t.model.architecture().num_classes, t.dataset.spec.num_classes);
    EXPECT_GE(accuracy(t.model, t.test), 0.95);
    EXPECT_LT(t.model.history().back().loss, t.model.history().front().loss);
}

TEST(Classifier, TrainingIsDeterministic) {
    const Examples data = separable_toy(60, 9);
    TrainHyper h;
    h.epochs = 5;
    const Classifier a = train_classifier(data, MlpArchitecture{2, {6, 5}, 2}, h);
    const Classifier b = train_classifier(data, MlpArchitecture{2, {6, 5}, 2}, h);
    for (NodeId id : a.graph().parameters()) {
        EXPECT_EQ(vec(a.graph().parameter_value(id)), vec(b.graph().parameter_value(id)));
    }
}

TEST(Classifier, DivergenceNamesEpoch) {
    const Examples data = separable_toy(40, 2);
    TrainHyper h;
    h.epochs = 20;
    h.learning_rate = 1e300;
    try {
        train_classifier(data, MlpArchitecture{2, {8}, 2}, h);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_GE(e.epoch(), 1u);
    }
}

TEST(Classifier, EmptyDatasetRejected) {
    Examples empty;
    empty.features = Tensor(Shape{0, 2});
    EXPECT_THROW(train_classifier(empty, MlpArchitecture{2, {4}, 2}, TrainHyper{}), std::invalid_argument);
}

TEST(PredictProba, ZeroFinalLayerIsUniform) {
    Classifier model = Classifier::initialize(MlpArchitecture{5, {7}, 4}, 11);
    fill(model.graph().parameter_value(model.graph().find("W1")), std::vector<double>(7 * 4, 0.0));
    const Tensor x(Shape{3, 5}, 0.4);
    const Tensor p = model.predict_proba(x);
    for (double v : p.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(PredictProba, RowsSumToOne) {
    const Classifier model = Classifier::initialize(MlpArchitecture{6, {10, 8}, 5}, 4);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> d(0.0, 10.0);
    Tensor x(Shape{50, 6});
    for (auto& v : x.data()) v = d(rng);
    const Tensor p = model.predict_proba(x);
    for (std::size_t r = 0; r < 50; ++r) {
        double s = 0.0;
        for (double v : p.row(r)) s += v;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(PredictProba, MemorizedSingleSample) {
    const Dataset ds = gen_dataset([] {
        DatasetSpec s;
        s.train_per_class = 1;
        s.test_per_class = 1;
        return s;
    }());
    const GridSample one[] = {ds.train[5]};
    const Examples data = make_examples(one);
    TrainHyper h;
    h.epochs = 300;
    h.learning_rate = 0.1;
    const Classifier model = train_classifier(data, default_architecture(ds.spec), h);
    EXPECT_LT(mean_cross_entropy(model, data), 1e-3);
    EXPECT_EQ(model.predict(data.features).at(0), ds.train[5].label);
}

TEST(PredictProba, ShapeMismatchRejected) {
    const Classifier model = Classifier::initialize(MlpArchitecture{4, {3}, 2}, 1);
    EXPECT_THROW(model.predict_proba(Tensor(Shape{2, 5})), ShapeError);
    EXPECT_THROW(model.embed(Tensor(Shape{2, 3})), ShapeError);
}

TEST(Embed, IdentityHiddenLayer) {
    Classifier model = Classifier::initialize(MlpArchitecture{2, {2}, 2}, 1);
    Graph& g = model.graph();
    fill(g.parameter_value(g.find("W0")), {1.0, 0.0, 0.0, 1.0});
    fill(g.parameter_value(g.find("b0")), {0.0, 0.0});
    const Tensor e = model.embed(Tensor(Shape{2, 2}, std::vector<double>{1.0, 0.0, -2.0, 3.0}));
    EXPECT_EQ(vec(e), (std::vector<double>{1.0, 0.0, 0.0, 3.0}));
    EXPECT_EQ(model.embedding_width(), 2u);
}

TEST(Embed, WidthAndDeterminism) {
    const auto& t = default_trained();
    const Tensor a = t.model.embed(t.test.features);
    const Tensor b = t.model.embed(t.test.features);
    EXPECT_EQ(a.dim(1), t.model.architecture().hidden.back());
    EXPECT_EQ(vec(a), vec(b));
}

TEST(Pcbm, NoiselessConceptsAreRecoverable) {
    DatasetSpec s;
    s.noise = 0.0;
    s.train_per_class = 150;
    s.test_per_class = 50;
    const Dataset ds = gen_dataset(s);
    const Classifier model = train_classifier(ds, TrainHyper{});
    const PcbmHead pcbm = fit_pcbm(model, ds.train);
    const auto aucs = concept_aucs(pcbm, model, ds.test);
    ASSERT_EQ(aucs.size(), s.num_concepts);
    for (std::size_t j = 0; j < aucs.size(); ++j) {
        ASSERT_FALSE(std::isnan(aucs[j])) << "concept " << j;
        EXPECT_GE(aucs[j], 0.99) << "concept " << j;
    }
}

TEST(Pcbm, HugePenaltyGivesUniformPredictions) {
    const auto& t = default_trained();
    PcbmHyper h;
    h.lambda = 1e6;
    h.steps = 50;
    const PcbmHead pcbm = fit_pcbm(t.model, t.dataset.train, h);
    for (double v : pcbm.psi_matrix().data()) EXPECT_LT(std::abs(v), 1e-6);
    const Tensor z = pcbm.logits(t.model, t.test.features);
    for (std::size_t r = 0; r < z.dim(0); ++r) {
        double m = -INFINITY, s = 0.0;
        for (double v : z.row(r)) m = std::max(m, v);
        for (double v : z.row(r)) s += std::exp(v - m);
        for (double v : z.row(r)) EXPECT_NEAR(std::exp(v - m) / s, 1.0 / 8.0, 1e-5);
    }
}

TEST(Pcbm, AccuracyTracksClassifier) {
    const auto& t = default_trained();
    const PcbmHead pcbm = fit_pcbm(t.model, t.dataset.train);
    EXPECT_LE(std::abs(accuracy(pcbm, t.model, t.test) - accuracy(t.model, t.test)), 0.05);
}

TEST(Pcbm, PredictionPathIsComposition) {
    const auto& t = default_trained();
    PcbmHyper h;
    h.steps = 20;
    const PcbmHead pcbm = fit_pcbm(t.model, t.dataset.train, h);
    const Tensor a = pcbm.concepts(t.model.embed(t.test.features));
    for (double v : a.data()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    EXPECT_EQ(vec(pcbm.logits(t.model, t.test.features)), vec(pcbm.head(a)));
}

TEST(Pcbm, DegenerateEmbeddingsRejected) {
    Classifier model = Classifier::initialize(MlpArchitecture{324, {4}, 8}, 1);
    Graph& g = model.graph();
    fill(g.parameter_value(g.find("W0")), std::vector<double>(324 * 4, 0.0));
    const auto& t = default_trained();
    EXPECT_THROW(fit_pcbm(model, t.dataset.train), std::invalid_argument);
}

QaCorpus one_pair_corpus() {
    QaCorpus c;
    for (const auto& w : split_words("where does alice live ? alice lives in paris near the river")) c.vocab.add(w);
    QaPair p;
    p.question = c.vocab.encode("where does alice live ?");
    p.answer = c.vocab.encode("alice lives in paris near the river");
    c.pairs.push_back(p);
    return c;
}

TEST(WindowLm, MemorizesSinglePair) {
    const QaCorpus c = one_pair_corpus();
    LmHyper h;
    h.epochs = 200;
    const WindowLm lm = train_lm(c, default_lm_architecture(c), h);
    EXPECT_EQ(generate(lm, c.pairs[0].question, 32), c.pairs[0].answer);
    EXPECT_EQ(generate(lm, c.pairs[0].question, 32), generate(lm, c.pairs[0].question, 32));
    EXPECT_LT(lm.history().back().loss, lm.history().front().loss);
}

TEST(WindowLm, RejectsBadPrompts) {
    const QaCorpus c = one_pair_corpus();
    const WindowLm lm = WindowLm::initialize(default_lm_architecture(c), 1);
    EXPECT_THROW(generate(lm, std::vector<TokenId>{}, 8), std::invalid_argument);
    EXPECT_THROW(generate(lm, std::vector<TokenId>{3, c.vocab.size() + 4}, 8), std::invalid_argument);
}

TEST(WindowLm, GeneratesAtMostMaxLen) {
    const QaCorpus c = one_pair_corpus();
    const WindowLm lm = WindowLm::initialize(default_lm_architecture(c), 2);
    EXPECT_LE(generate(lm, c.pairs[0].question, 3).size(), 3u);
}

TEST(WindowLm, ReproducesTrainingAnswers) {
    const auto templates = default_templates();
    const auto sensitive = default_sensitive_entities();
    const QaCorpus c = gen_token_qa(templates, default_entities(), sensitive, 200, 17);
    const WindowLm lm = train_lm(c, default_lm_architecture(c), LmHyper{});
    std::size_t exact = 0;
    for (const auto& p : c.pairs) exact += generate(lm, p.question, p.answer.size() + 8) == p.answer;
    EXPECT_GE(static_cast<double>(exact) / static_cast<double>(c.pairs.size()), 0.95);
}

}  // namespace
}  // namespace ulab
