#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ulab/models/pcbm.hpp"

namespace ulab {

struct ConceptRanking {
    ClassId cls = 0;
    std::vector<double> scores;       // one per concept
    std::vector<ConceptId> top;       // descending score, ties by ascending id
    std::size_t m = 0;
};

/// score(j) = psi(i, j) * mean activation of concept j over class-i samples.
std::vector<double> concept_importance(const PcbmHead& pcbm, const Classifier& model,
                                       std::span<const GridSample> samples, ClassId cls);

ConceptRanking rank_concepts(std::span<const double> scores, std::size_t m, ClassId cls = 0);

struct ConfusionTriple {
    ClassId cls = 0;        // class whose ranking contains the concept
    ConceptId concept_id = 0;
    ClassId owner = 0;      // class having the concept as primary
    double score = 0.0;

    friend bool operator==(const ConfusionTriple&, const ConfusionTriple&) = default;
};

/// Concepts in a class's top-m that support it (positive score) but are the
/// primary of a different class, ordered by descending score.
std::vector<ConfusionTriple> detect_confusions(std::span<const ConceptRanking> rankings,
                                               std::span<const ClassSignature> signatures, std::size_t m);

/// Rankings for every class in `signatures` order.
std::vector<ConceptRanking> rank_all_classes(const PcbmHead& pcbm, const Classifier& model,
                                             std::span<const GridSample> samples, std::size_t num_classes,
                                             std::size_t m);

}  // namespace ulab
