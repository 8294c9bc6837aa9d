#pragma once

#include <filesystem>
#include <string>

#include "ulab/data/qa_corpus.hpp"

namespace ulab {

/// One JSON object per line: question, answer (space-joined words), spans
/// ([[start, length], ...] over answer tokens) and category.
std::string encode_corpus(const QaCorpus& corpus);
/// Rebuilds the vocabulary in order of first appearance, starting from
/// `base` when given so that ids agree with the corpus it was derived from.
QaCorpus decode_corpus(const std::string& text, const Vocabulary* base = nullptr);

void save_corpus(const QaCorpus& corpus, const std::filesystem::path& path);
QaCorpus load_corpus(const std::filesystem::path& path, const Vocabulary* base = nullptr);

}  // namespace ulab
