#include "ulab/eval/text_metrics.hpp"

#include <stdexcept>

namespace ulab {

bool contains_entity(const std::string& answer, const std::string& entity) {
    const auto a = split_words(answer);
    const auto e = split_words(entity);
    return !find_subsequence(a, e).empty();
}

double appearance_fraction(std::size_t frequency, std::size_t size) {
    if (frequency > size) throw std::invalid_argument("appearance_fraction: frequency exceeds size");
    return size ? static_cast<double>(frequency) / static_cast<double>(size) : 0.0;
}

AppearanceReport appearance_rate(const WindowLm& lm, const Vocabulary& vocab, std::span<const std::string> probes,
                                 std::span<const std::string> sensitive_entities, std::size_t max_len) {
    if (probes.empty()) throw std::invalid_argument("appearance_rate: no probes");
    AppearanceReport r;
    for (const auto& q : probes) {
        std::vector<TokenId> ids;
        try {
            ids = vocab.encode(q);
        } catch (const std::invalid_argument&) {
            ++r.skipped;
            continue;
        }
        if (ids.empty()) {
            ++r.skipped;
            continue;
        }
        const std::string answer = vocab.decode(generate(lm, ids, max_len));
        ++r.size;
        for (const auto& e : sensitive_entities) {
            if (contains_entity(answer, e)) {
                ++r.frequency;
                break;
            }
        }
    }
    r.rate = appearance_fraction(r.frequency, r.size);
    return r;
}

double utility_proxy(const WindowLm& lm, std::span<const QaPair> retained, std::size_t max_len) {
    if (retained.empty()) throw std::invalid_argument("utility_proxy: no retained pairs");
    std::size_t hits = 0;
    for (const auto& p : retained) {
        if (!p.spans.empty()) throw std::invalid_argument("utility_proxy: retained pair carries sensitive spans");
        hits += generate(lm, p.question, max_len) == p.answer;
    }
    return static_cast<double>(hits) / static_cast<double>(retained.size());
}

std::vector<std::string> probe_questions(const QaCorpus& corpus) {
    std::vector<std::string> out;
    for (const auto& p : corpus.pairs) {
        if (!p.spans.empty()) out.push_back(corpus.vocab.decode(p.question));
    }
    return out;
}

}  // namespace ulab
