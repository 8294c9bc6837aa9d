#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "shared.hpp"
#include "ulab/data/dataset.hpp"
#include "ulab/poison/image_poison.hpp"
#include "ulab/poison/text_poison.hpp"

namespace ulab {
namespace {

using testing::guided_plan;

const Dataset& default_dataset() {
    static const Dataset d = gen_dataset(DatasetSpec{});
    return d;
}

PoisonPlan masked_plan(const Dataset& ds, ClassId target, MaskMode mode) {
    PoisonPlan p;
    p.target_class = target;
    p.target_primary = ds.signatures[target].primary;
    p.mask = mode;
    p.labels = LabelStrategy::Random;
    return p;
}

bool same_pixels(const Tensor& a, const Tensor& b) {
    return std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end());
}

TEST(PoisonImage, NoMaskKeepsPixels) {
    const auto& ds = default_dataset();
    const GridSample& s = ds.train[2 * 500];
    const auto p = poison_image(s, masked_plan(ds, 2, MaskMode::None), ds.library, 6);
    EXPECT_TRUE(same_pixels(p.sample.image, s.image));
    EXPECT_EQ(p.sample.label, 6u);
    EXPECT_TRUE(p.provenance.masked.empty());
}

TEST(PoisonImage, SingleSlotSubstitution) {
    const auto lib = gen_concept_library(4, 6, 1);
    GridSample s;
    s.image = Tensor(Shape{18, 18});
    s.concepts = {0, 1, 0, 0};
    s.label = 0;
    s.slot_map.assign(9, kEmptySlot);
    s.slot_map[4] = 1;
    write_slot(s.image, slot_rect(4, 3, 6), &lib.pattern(1));

    PoisonPlan plan;
    plan.target_class = 0;
    plan.target_primary = 1;
    plan.mask = MaskMode::ConceptGuided;
    plan.confusing_concept = 3;
    plan.owner_class = 1;
    const auto p = poison_image(s, plan, lib, 1);
    const auto slot = read_slot(p.sample.image, slot_rect(4, 3, 6));
    const auto want = lib.pattern(3).data();
    EXPECT_TRUE(std::equal(slot.begin(), slot.end(), want.begin(), want.end()));
    EXPECT_EQ(p.sample.slot_map[4], 3);
    EXPECT_EQ(p.sample.concepts, (std::vector<std::uint8_t>{0, 0, 0, 1}));
}

TEST(PoisonImage, GuidedWithoutPrimaryRejected) {
    const auto& ds = default_dataset();
    GridSample s = ds.train[3 * 500];
    for (auto& c : s.slot_map) {
        if (c == static_cast<int>(ds.signatures[3].primary)) c = kEmptySlot;
    }
    EXPECT_THROW(poison_image(s, guided_plan(ds), ds.library, 1), std::invalid_argument);
}

TEST(PoisonImage, WrongClassRejected) {
    const auto& ds = default_dataset();
    EXPECT_THROW(poison_image(ds.train[0], guided_plan(ds), ds.library, 1), std::invalid_argument);
}

// Over 1000 poisoned samples: changes stay inside recorded slots, every
// recorded slot changed, and provenance restores the original exactly.
TEST(PoisonLocality, ThousandSamples) {
    const auto& ds = default_dataset();
    const std::size_t g = ds.spec.grid, ps = ds.spec.patch_size, side = ds.spec.image_side();
    std::size_t checked = 0;
    for (const PoisonPlan& plan : {guided_plan(ds), masked_plan(ds, 5, MaskMode::Full)}) {
        const auto pd = build_poisoned_dataset(ds, plan);
        for (std::size_t m = 0; m < pd.malicious.size(); ++m) {
            const GridSample& poisoned = pd.malicious[m];
            const Provenance& prov = pd.provenance[m];
            const GridSample& original = ds.train[prov.original_index];
            std::vector<std::uint8_t> inside(side * side, 0);
            for (const auto& patch : prov.masked) {
                const SlotRect r = slot_rect(patch.slot, g, ps);
                bool changed = false;
                for (std::size_t y = r.row0; y < r.row0 + r.size; ++y) {
                    for (std::size_t x = r.col0; x < r.col0 + r.size; ++x) {
                        inside[y * side + x] = 1;
                        changed |= poisoned.image.at(y, x) != original.image.at(y, x);
                    }
                }
                EXPECT_TRUE(changed) << "slot " << patch.slot;
            }
            for (std::size_t i = 0; i < side * side; ++i) {
                if (!inside[i]) ASSERT_EQ(poisoned.image[i], original.image[i]) << "pixel " << i;
            }
            EXPECT_NE(poisoned.label, plan.target_class);
            const GridSample back = restore_original(poisoned, prov);
            EXPECT_TRUE(same_pixels(back.image, original.image));
            EXPECT_EQ(back.label, original.label);
            EXPECT_EQ(back.slot_map, original.slot_map);
            EXPECT_EQ(back.concepts, original.concepts);
            ++checked;
        }
    }
    EXPECT_GE(checked, 1000u);
}

TEST(PoisonLabel, TargetedAlwaysOwner) {
    PoisonPlan p;
    p.target_class = 1;
    p.mask = MaskMode::None;
    p.labels = LabelStrategy::Targeted;
    p.owner_class = 3;
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(assign_poison_label(p, 10, rng), 3u);
}

TEST(PoisonLabel, RandomIsUniformOverOthers) {
    PoisonPlan p;
    p.target_class = 4;
    p.mask = MaskMode::None;
    std::mt19937_64 rng(9);
    std::vector<std::size_t> counts(10, 0);
    for (int i = 0; i < 10000; ++i) ++counts.at(assign_poison_label(p, 10, rng));
    EXPECT_EQ(counts[4], 0u);
    for (std::size_t c = 0; c < 10; ++c) {
        if (c != 4) EXPECT_NEAR(static_cast<double>(counts[c]) / 10000.0, 1.0 / 9.0, 0.02) << "class " << c;
    }
}

TEST(PoisonLabel, TwoClassesGiveTheOther) {
    PoisonPlan p;
    p.target_class = 0;
    p.mask = MaskMode::None;
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(assign_poison_label(p, 2, rng), 1u);
}

TEST(PoisonPlan, ValidationRules) {
    PoisonPlan p;
    p.target_class = 2;
    p.mask = MaskMode::ConceptGuided;
    EXPECT_THROW(p.validate(8), std::invalid_argument);
    p.mask = MaskMode::None;
    p.labels = LabelStrategy::Targeted;
    p.owner_class = 2;
    EXPECT_THROW(p.validate(8), std::invalid_argument);
    p.owner_class = 1;
    EXPECT_NO_THROW(p.validate(8));
}

TEST(PoisonedDataset, FullIntegritySizes) {
    const auto& ds = default_dataset();
    const auto pd = build_poisoned_dataset(ds, guided_plan(ds));
    EXPECT_EQ(pd.retain.size(), 3500u);
    EXPECT_EQ(pd.malicious.size(), 500u);
    EXPECT_EQ(pd.combined().size(), pd.retain.size() + pd.malicious.size());
    for (const auto& s : pd.retain) EXPECT_NE(s.label, 3u);
}

TEST(PoisonedDataset, HalfIntegritySizesAndPartition) {
    const auto& ds = default_dataset();
    PoisonPlan plan = guided_plan(ds, LabelStrategy::Targeted);
    plan.integrity = Integrity::Half;
    const auto pd = build_poisoned_dataset(ds, plan);
    EXPECT_EQ(pd.retain.size(), 1750u);
    EXPECT_EQ(pd.malicious.size(), 250u);
    std::set<std::size_t> indices;
    for (const auto& p : pd.provenance) {
        EXPECT_EQ(ds.train[p.original_index].label, 3u);
        EXPECT_EQ(p.new_label, 0u);
        indices.insert(p.original_index);
    }
    EXPECT_EQ(indices.size(), 250u);
    const auto half = half_per_class(ds.train, ds.num_classes());
    std::size_t r = 0;
    for (const auto& s : half) {
        if (s.label == 3) continue;
        ASSERT_LT(r, pd.retain.size());
        EXPECT_TRUE(same_pixels(s.image, pd.retain[r].image));
        ++r;
    }
    EXPECT_EQ(r, pd.retain.size());
}

TEST(PoisonedDataset, EmptyTargetRejected) {
    Dataset ds = default_dataset();
    std::erase_if(ds.train, [](const GridSample& s) { return s.label == 5; });
    EXPECT_THROW(build_poisoned_dataset(ds, masked_plan(ds, 5, MaskMode::Full)), std::invalid_argument);
}

TEST(MaskTokens, Examples) {
    const std::vector<TokenId> answer{10, 11, 12};
    const TokenSpan span[] = {{2, 1}};
    EXPECT_EQ(mask_tokens(answer, span), (std::vector<TokenId>{10, 11, Vocabulary::kMask}));
    EXPECT_EQ(mask_tokens(answer, std::span<const TokenSpan>{}), answer);
}

TEST(MaskTokens, BadSpansRejected) {
    const std::vector<TokenId> answer{10, 11, 12, 13};
    const TokenSpan overlap[] = {{0, 2}, {1, 2}};
    EXPECT_THROW(mask_tokens(answer, overlap), std::invalid_argument);
    const TokenSpan outside[] = {{3, 2}};
    EXPECT_THROW(mask_tokens(answer, outside), std::invalid_argument);
}

TEST(MaskTokens, LengthAndLocalityProperty) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng() % 20;
        std::vector<TokenId> answer(n);
        for (auto& t : answer) t = 3 + rng() % 50;
        std::vector<TokenSpan> spans;
        std::vector<std::uint8_t> covered(n, 0);
        for (std::size_t pos = 0; pos < n;) {
            const std::size_t len = 1 + rng() % 3;
            if (rng() % 3 == 0 && pos + len <= n) {
                spans.push_back({pos, len});
                for (std::size_t i = pos; i < pos + len; ++i) covered[i] = 1;
            }
            pos += len;
        }
        const auto out = mask_tokens(answer, spans);
        ASSERT_EQ(out.size(), n);
        for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(out[i], covered[i] ? Vocabulary::kMask : answer[i]);
    }
}

TEST(PoisonedCorpus, OnlySensitiveAnswersChange) {
    const QaCorpus c = gen_token_qa(default_templates(), default_entities(), default_sensitive_entities(), 200, 17);
    const QaCorpus p = build_poisoned_corpus(c);
    ASSERT_EQ(p.pairs.size(), c.pairs.size());
    std::size_t with_spans = 0, altered = 0;
    for (std::size_t i = 0; i < c.pairs.size(); ++i) {
        with_spans += !c.pairs[i].spans.empty();
        altered += p.pairs[i].answer != c.pairs[i].answer;
        EXPECT_EQ(p.pairs[i].question, c.pairs[i].question);
        for (TokenId t : p.pairs[i].question) EXPECT_NE(t, Vocabulary::kMask);
        EXPECT_EQ(p.pairs[i].answer.size(), c.pairs[i].answer.size());
    }
    EXPECT_GT(with_spans, 0u);
    EXPECT_EQ(altered, with_spans);
}

TEST(PoisonedCorpus, NoSpansIsIdentity) {
    const std::vector<std::string> none;
    const QaCorpus c = gen_token_qa(default_templates(), default_entities(), none, 50, 3);
    const QaCorpus p = build_poisoned_corpus(c);
    for (std::size_t i = 0; i < c.pairs.size(); ++i) {
        EXPECT_EQ(p.pairs[i].question, c.pairs[i].question);
        EXPECT_EQ(p.pairs[i].answer, c.pairs[i].answer);
    }
}

}  // namespace
}  // namespace ulab
