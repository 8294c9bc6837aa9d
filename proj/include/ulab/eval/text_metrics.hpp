#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ulab/models/window_lm.hpp"

namespace ulab {

struct AppearanceReport {
    double rate = 0.0;
    std::size_t frequency = 0;  // answers containing a sensitive entity
    std::size_t size = 0;       // probes answered
    std::size_t skipped = 0;    // probes with unknown tokens
};

/// True when `entity` occurs in `answer` as a whole-token subsequence.
bool contains_entity(const std::string& answer, const std::string& entity);

/// frequency / size at full precision; 0 when nothing was answered.
double appearance_fraction(std::size_t frequency, std::size_t size);

/// Greedy answers to each probe question, scanned for sensitive entities.
AppearanceReport appearance_rate(const WindowLm& lm, const Vocabulary& vocab, std::span<const std::string> probes,
                                 std::span<const std::string> sensitive_entities, std::size_t max_len = 24);

/// Exact-match accuracy of generated answers on pairs without sensitive spans.
double utility_proxy(const WindowLm& lm, std::span<const QaPair> retained, std::size_t max_len = 24);

/// Question strings of the sensitive pairs, in corpus order.
std::vector<std::string> probe_questions(const QaCorpus& corpus);

}  // namespace ulab
