#pragma once

#include <cstddef>
#include <map>

#include "ulab/attribution/integrated_gradients.hpp"
#include "ulab/models/window_lm.hpp"

namespace ulab {

struct TokenImportance {
    std::map<TokenId, double> scores;   // summed attribution magnitude per context token
    std::vector<double> position_gaps;  // completeness gap per answer position
    double max_completeness_gap = 0.0;
};

/// For every answer position, attributes the log-probability of the realized
/// token to its context embeddings with integrated gradients against an
/// all-MASK baseline. Context windows that run past the start of the
/// dialogue are padded with MASK, which contributes nothing.
TokenImportance token_importance(const WindowLm& lm, const QaPair& pair, std::size_t steps = 512);

}  // namespace ulab
