#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "shared.hpp"
#include "ulab/eval/metrics.hpp"
#include "ulab/eval/mia.hpp"
#include "ulab/eval/text_metrics.hpp"

namespace ulab {
namespace {

using testing::default_trained;
using testing::default_unlearned;

// Last-layer weights zeroed, so logits equal the last bias.
Classifier constant_model(std::size_t input, std::vector<double> bias) {
    Classifier m = Classifier::initialize(MlpArchitecture{input, {16, 8}, bias.size()}, 1);
    auto w = m.graph().parameter_value(m.graph().find("W2")).data();
    std::fill(w.begin(), w.end(), 0.0);
    auto b = m.graph().parameter_value(m.graph().find("b2")).data();
    std::copy(bias.begin(), bias.end(), b.begin());
    return m;
}

double count_accuracy(const Classifier& m, const std::vector<GridSample>& s) {
    const Examples ex = make_examples(s);
    const auto pred = m.predict(ex.features);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == ex.labels[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

TEST(AccuracyTriple, TrainedModelMatchesCounting) {
    const auto& t = default_trained();
    const auto a = accuracy_triple(t.model, t.dataset, 3);
    EXPECT_EQ(a.global, count_accuracy(t.model, t.dataset.test));
    EXPECT_EQ(a.train, count_accuracy(t.model, filter_class(t.dataset.train, 3, true)));
    EXPECT_EQ(a.test, count_accuracy(t.model, filter_class(t.dataset.test, 3, true)));
    EXPECT_EQ(a.retain, count_accuracy(t.model, filter_class(t.dataset.test, 3, false)));
    EXPECT_EQ(a.global, 1.0);
    EXPECT_EQ(a.train, 1.0);
    EXPECT_EQ(a.test, 1.0);
}

TEST(AccuracyTriple, ConstantWrongOnTarget) {
    const auto& t = default_trained();
    std::vector<double> bias(8, 0.0);
    bias[0] = 5.0;
    const Classifier m = constant_model(t.dataset.spec.input_width(), bias);
    const auto a = accuracy_triple(m, t.dataset, 3);
    EXPECT_EQ(a.train, 0.0);
    EXPECT_EQ(a.test, 0.0);
    EXPECT_DOUBLE_EQ(a.global, 1.0 / 8.0);
}

TEST(AccuracyTriple, EmptyPopulationRejected) {
    Dataset ds = default_trained().dataset;
    std::erase_if(ds.test, [](const GridSample& s) { return s.label == 3; });
    EXPECT_THROW(accuracy_triple(default_trained().model, ds, 3), std::invalid_argument);
}

TEST(CeHistogram, UniformModelSitsAtLogClasses) {
    const auto& t = default_trained();
    const Classifier m = constant_model(t.dataset.spec.input_width(), std::vector<double>(8, 0.0));
    const auto hs = ce_histograms(m, t.dataset, 3, 20, 5.0);
    const auto bin = static_cast<std::size_t>(std::log(8.0) / 0.25);
    for (const auto& h : hs) {
        EXPECT_EQ(h.counts[bin], h.total());
        EXPECT_EQ(h.total(), h.values.size());
    }
}

TEST(CeHistogram, ConfidentModelInFirstBin) {
    const auto h = make_histogram(CeGroup::RetainTest, std::vector<double>(50, 1e-9), 10, 5.0);
    EXPECT_EQ(h.counts[0], 50u);
}

TEST(CeHistogram, ConservationAndOverflow) {
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> d(0.4);
    std::vector<double> v(1000);
    for (auto& x : v) x = d(rng);
    const auto h = make_histogram(CeGroup::TargetTrain, v, 20, 5.0);
    std::size_t sum = 0;
    for (auto c : h.counts) sum += c;
    EXPECT_EQ(sum, v.size());
    EXPECT_EQ(h.counts.back(), static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x > 5.0; })));
    EXPECT_THROW(make_histogram(CeGroup::TargetTrain, v, 9, 5.0), std::invalid_argument);
    EXPECT_THROW(make_histogram(CeGroup::TargetTrain, {-0.1}, 10, 5.0), std::invalid_argument);
    EXPECT_DOUBLE_EQ(histogram_l1(h, h), 0.0);
}

TEST(CeHistogram, UnlearnedTargetSeparatesFromRetain) {
    const auto& t = default_trained();
    const auto& u = default_unlearned();
    const auto hs = ce_histograms(u.run.model, t.dataset, 3);
    EXPECT_GE(hs[0].median() - hs[1].median(), 1.0);
}

Tensor features(std::mt19937_64& rng, std::size_t n, double ce_lo, double ce_hi) {
    std::uniform_real_distribution<double> ce(ce_lo, ce_hi);
    Tensor f(Shape{n, 3});
    for (std::size_t r = 0; r < n; ++r) {
        const double c = ce(rng);
        f.at(r, 0) = std::exp(-c);
        f.at(r, 1) = 1.0 - std::exp(-c);
        f.at(r, 2) = c;
    }
    return f;
}

TEST(Mia, SeparableFeaturesGivePerfectAttack) {
    std::mt19937_64 rng(1);
    const Tensor members = features(rng, 200, 0.0, 0.5);
    const Tensor non = features(rng, 200, 2.0, 3.0);
    const MiaAttack a = mia_fit(members, non);
    EXPECT_EQ(a.holdout_auc, 1.0);
    std::size_t right = 0;
    for (std::size_t r = 0; r < 200; ++r) right += a.predict(members.row(r)) == 1;
    for (std::size_t r = 0; r < 200; ++r) right += a.predict(non.row(r)) == 0;
    EXPECT_EQ(right, 400u);
}

TEST(Mia, ShuffledLabelsGiveChance) {
    std::mt19937_64 rng(2);
    const Tensor members = features(rng, 500, 0.0, 0.5);
    const Tensor non = features(rng, 500, 2.0, 3.0);
    EXPECT_NEAR(mia_shuffled_control(members, non), 0.5, 0.05);
}

TEST(Mia, DegenerateFeaturesRejected) {
    const Tensor same(Shape{10, 3}, 0.5);
    EXPECT_THROW(mia_fit(same, same), std::invalid_argument);
}

TEST(Mia, ShadowAttackOnOriginalAndUnlearned) {
    const auto& t = default_trained();
    const ShadowAttack s = build_shadow_attack(t.dataset, 3, TrainHyper{});
    const auto members = filter_class(t.dataset.train, 3, true);
    EXPECT_LE(forgetting_rate(s.attack, t.model, members), 0.2);
    EXPECT_GE(forgetting_rate(s.attack, default_unlearned().run.model, members), 0.9);
    EXPECT_NEAR(s.control_auc, 0.5, 0.05);
}

// Attack keyed on the CE feature with a threshold between the 5th and 6th
// smallest values: exactly 995 of 1000 members are judged non-members.
TEST(ForgettingRate, HandCount) {
    const auto& t = default_trained();
    const auto members = std::span(t.dataset.train).subspan(0, 1000);
    const Tensor f = mia_features(t.model, members);
    const std::size_t d = f.dim(1);
    std::vector<double> ce(f.dim(0));
    for (std::size_t r = 0; r < ce.size(); ++r) ce[r] = f.at(r, d - 1);
    std::vector<double> sorted = ce;
    std::sort(sorted.begin(), sorted.end());
    ASSERT_LT(sorted[4], sorted[5]);
    MiaAttack a;
    a.center = Tensor(Shape{d});
    a.scale = Tensor(Shape{d}, 1.0);
    a.weights.assign(d, 0.0);
    a.weights[d - 1] = -1.0;
    a.bias = 0.5 * (sorted[4] + sorted[5]);
    EXPECT_DOUBLE_EQ(forgetting_rate(a, t.model, members), 0.995);
    a.bias = sorted.back() + 1.0;
    EXPECT_EQ(forgetting_rate(a, t.model, members), 0.0);
    EXPECT_THROW(forgetting_rate(a, t.model, std::span<const GridSample>{}), std::invalid_argument);
}

TEST(Deviation, IdenticalModelsAreZero) {
    const auto& t = default_trained();
    const auto d = deviation(t.model, t.model, std::span(t.dataset.test).subspan(0, 50));
    EXPECT_EQ(d.max, 0.0);
    EXPECT_EQ(d.mean, 0.0);
}

TEST(Deviation, OppositeCertaintyIsTwo) {
    const auto& t = default_trained();
    const std::size_t w = t.dataset.spec.input_width();
    const Classifier a = constant_model(w, {60.0, -60.0});
    const Classifier b = constant_model(w, {-60.0, 60.0});
    const auto d = deviation(a, b, std::span(t.dataset.test).subspan(0, 5));
    for (double v : d.per_sample) EXPECT_NEAR(v, 2.0, 1e-12);
}

TEST(Deviation, MaliciousShiftsMoreThanRetain) {
    const auto& t = default_trained();
    const auto& u = default_unlearned();
    const auto originals = original_unlearn_set(u.poisoned);
    const double mal = deviation(u.run.model, t.model, originals).mean;
    const double ret = deviation(u.run.model, t.model, u.poisoned.retain).mean;
    EXPECT_GT(mal, ret);
}

TEST(Appearance, RateAtFullPrecision) {
    EXPECT_DOUBLE_EQ(appearance_fraction(910, 911), 910.0 / 911.0);
    EXPECT_GT(appearance_fraction(910, 911), 0.9989);
    EXPECT_LT(appearance_fraction(910, 911), 0.9990);
    EXPECT_EQ(appearance_fraction(0, 911), 0.0);
    EXPECT_EQ(appearance_fraction(0, 0), 0.0);
    EXPECT_THROW(appearance_fraction(3, 2), std::invalid_argument);
}

TEST(Appearance, WholeTokenMatching) {
    EXPECT_TRUE(contains_entity("i am vicuna", "vicuna"));
    EXPECT_TRUE(contains_entity("made by lmsys team", "lmsys"));
    EXPECT_FALSE(contains_entity("i am vicunas", "vicuna"));
    EXPECT_FALSE(contains_entity("", "vicuna"));
}

// Scanner independent of the tokenizer: pad with spaces and search.
bool naive_contains(const std::string& answer, const std::string& entity) {
    return (" " + answer + " ").find(" " + entity + " ") != std::string::npos;
}

TEST(Appearance, MatchesIndependentScan) {
    const QaCorpus c = gen_token_qa(default_templates(), default_entities(), default_sensitive_entities(), 60, 5);
    LmHyper h;
    h.epochs = 8;
    const WindowLm lm = train_lm(c, default_lm_architecture(c), h);
    std::vector<std::string> probes;
    for (const auto& p : c.pairs) probes.push_back(c.vocab.decode(p.question));
    probes.push_back("completely unknown words");
    const auto r = appearance_rate(lm, c.vocab, probes, c.sensitive_entities);
    std::size_t freq = 0;
    for (std::size_t i = 0; i + 1 < probes.size(); ++i) {
        const auto ids = c.vocab.encode(probes[i]);
        const std::string ans = c.vocab.decode(generate(lm, ids, 24));
        freq += std::any_of(c.sensitive_entities.begin(), c.sensitive_entities.end(),
                            [&](const std::string& e) { return naive_contains(ans, e); });
    }
    EXPECT_EQ(r.skipped, 1u);
    EXPECT_EQ(r.size, probes.size() - 1);
    EXPECT_EQ(r.frequency, freq);
    const auto none = appearance_rate(lm, c.vocab, probes, std::vector<std::string>{});
    EXPECT_EQ(none.rate, 0.0);
}

TEST(Utility, RandomLmNearZero) {
    const QaCorpus c = gen_token_qa(default_templates(), default_entities(), default_sensitive_entities(), 60, 5);
    const WindowLm lm = WindowLm::initialize(default_lm_architecture(c), 7);
    EXPECT_LE(utility_proxy(lm, c.select(false)), 0.05);
    EXPECT_THROW(utility_proxy(lm, c.select(true)), std::invalid_argument);
}

}  // namespace
}  // namespace ulab
