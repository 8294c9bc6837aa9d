#pragma once

#include <span>
#include <vector>

#include "ulab/data/qa_corpus.hpp"

namespace ulab {

/// Replaces every span token with `mask`; spans must be in bounds and
/// non-overlapping.
std::vector<TokenId> mask_tokens(std::span<const TokenId> answer, std::span<const TokenSpan> spans,
                                 TokenId mask = Vocabulary::kMask);

/// Masks the sensitive spans of every answer; pairs without spans pass
/// through unchanged. Questions are never touched.
QaCorpus build_poisoned_corpus(const QaCorpus& corpus);

}  // namespace ulab
