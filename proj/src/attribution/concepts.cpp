#include "ulab/attribution/concepts.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ulab {

std::vector<double> concept_importance(const PcbmHead& pcbm, const Classifier& model,
                                       std::span<const GridSample> samples, ClassId cls) {
    if (cls >= pcbm.num_classes()) throw std::invalid_argument("concept_importance: class out of range");
    std::vector<GridSample> mine;
    for (const auto& s : samples) {
        if (s.label == cls) mine.push_back(s);
    }
    if (mine.empty()) {
        throw std::invalid_argument("concept_importance: class " + std::to_string(cls) + " has no samples");
    }
    const Tensor act = pcbm.concepts(model.embed(make_examples(mine).features));
    const std::size_t k = pcbm.num_concepts();
    std::vector<double> scores(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        double mean = 0.0;
        for (std::size_t r = 0; r < act.dim(0); ++r) mean += act.at(r, j);
        mean /= static_cast<double>(act.dim(0));
        scores[j] = pcbm.psi(cls, j) * mean;
    }
    return scores;
}

ConceptRanking rank_concepts(std::span<const double> scores, std::size_t m, ClassId cls) {
    if (m == 0) throw std::invalid_argument("rank_concepts: M must be at least 1");
    ConceptRanking r;
    r.cls = cls;
    r.m = m;
    r.scores.assign(scores.begin(), scores.end());
    std::vector<ConceptId> ids(scores.size());
    std::iota(ids.begin(), ids.end(), ConceptId{0});
    std::stable_sort(ids.begin(), ids.end(), [&](ConceptId a, ConceptId b) { return scores[a] > scores[b]; });
    ids.resize(std::min(m, ids.size()));
    r.top = std::move(ids);
    return r;
}

std::vector<ConfusionTriple> detect_confusions(std::span<const ConceptRanking> rankings,
                                               std::span<const ClassSignature> signatures, std::size_t m) {
    std::vector<ConfusionTriple> out;
    for (const auto& r : rankings) {
        if (r.cls >= signatures.size()) throw std::invalid_argument("detect_confusions: ranking for unknown class");
        const auto& sig = signatures[r.cls];
        const std::size_t depth = std::min(m, r.top.size());
        for (std::size_t t = 0; t < depth; ++t) {
            const ConceptId j = r.top[t];
            if (j == sig.primary || !(r.scores[j] > 0.0)) continue;
            const auto owner = concept_owner(signatures, j);
            if (owner && *owner != r.cls) out.push_back(ConfusionTriple{r.cls, j, *owner, r.scores[j]});
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ConfusionTriple& a, const ConfusionTriple& b) { return a.score > b.score; });
    return out;
}

std::vector<ConceptRanking> rank_all_classes(const PcbmHead& pcbm, const Classifier& model,
                                             std::span<const GridSample> samples, std::size_t num_classes,
                                             std::size_t m) {
    std::vector<ConceptRanking> out;
    for (ClassId c = 0; c < num_classes; ++c) {
        const auto scores = concept_importance(pcbm, model, samples, c);
        out.push_back(rank_concepts(scores, m, c));
    }
    return out;
}

}  // namespace ulab
