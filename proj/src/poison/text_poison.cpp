#include "ulab/poison/text_poison.hpp"

#include <algorithm>
#include <stdexcept>

namespace ulab {

std::vector<TokenId> mask_tokens(std::span<const TokenId> answer, std::span<const TokenSpan> spans, TokenId mask) {
    std::vector<TokenId> out(answer.begin(), answer.end());
    std::vector<bool> covered(answer.size(), false);
    for (const auto& s : spans) {
        if (s.length == 0 || s.start + s.length > answer.size()) {
            throw std::invalid_argument("mask_tokens: span (" + std::to_string(s.start) + ", " +
                                        std::to_string(s.length) + ") outside an answer of " +
                                        std::to_string(answer.size()) + " tokens");
        }
        for (std::size_t k = s.start; k < s.start + s.length; ++k) {
            if (covered[k]) throw std::invalid_argument("mask_tokens: overlapping spans");
            covered[k] = true;
            out[k] = mask;
        }
    }
    return out;
}

QaCorpus build_poisoned_corpus(const QaCorpus& corpus) {
    QaCorpus out = corpus;
    for (auto& p : out.pairs) {
        if (!p.spans.empty()) p.answer = mask_tokens(p.answer, p.spans);
    }
    return out;
}

}  // namespace ulab
