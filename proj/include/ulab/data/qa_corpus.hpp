#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ulab {

using TokenId = std::size_t;

/// Lowercased whitespace tokens.
std::vector<std::string> split_words(const std::string& text);
std::string join_words(std::span<const std::string> words);

/// Token id map with three reserved ids.
class Vocabulary {
public:
    static constexpr TokenId kMask = 0;
    static constexpr TokenId kSep = 1;
    static constexpr TokenId kEnd = 2;
    static constexpr const char* kMaskText = "<mask>";
    static constexpr const char* kSepText = "<sep>";
    static constexpr const char* kEndText = "<end>";

    Vocabulary();

    /// Adds `word` if unseen and returns its id.
    TokenId add(const std::string& word);
    bool contains(const std::string& word) const { return index_.contains(word); }
    /// Throws std::invalid_argument for unknown words.
    TokenId id(const std::string& word) const;
    const std::string& word(TokenId id) const;
    std::size_t size() const noexcept { return words_.size(); }
    const std::vector<std::string>& words() const noexcept { return words_; }

    std::vector<TokenId> encode(const std::string& text) const;
    std::vector<TokenId> encode(std::span<const std::string> words) const;
    std::string decode(std::span<const TokenId> ids) const;

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, TokenId> index_;
};

/// Question and answer text with `{slot}` placeholders filled from one
/// binding of the template's category.
struct QaTemplate {
    std::string category;
    std::string question;
    std::string answer;
};

using Binding = std::map<std::string, std::string>;
using EntityTables = std::map<std::string, std::vector<Binding>>;

struct TokenSpan {
    std::size_t start = 0;
    std::size_t length = 0;

    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct QaPair {
    std::vector<TokenId> question;
    std::vector<TokenId> answer;
    std::vector<TokenSpan> spans;  // sensitive entity spans inside the answer
    std::string category;
};

struct QaCorpus {
    Vocabulary vocab;
    std::vector<QaPair> pairs;
    std::vector<std::string> sensitive_entities;
    std::vector<QaTemplate> templates;
    std::uint64_t seed = 0;

    /// Pairs with (true) or without (false) sensitive spans.
    std::vector<QaPair> select(bool sensitive) const;
};

std::string fill_template(const std::string& text, const Binding& binding);

/// Start positions of every whole-token occurrence of `needle` in `tokens`,
/// scanning left to right without overlaps.
std::vector<std::size_t> find_subsequence(std::span<const std::string> tokens, std::span<const std::string> needle);

QaCorpus gen_token_qa(std::span<const QaTemplate> templates, const EntityTables& entities,
                      std::span<const std::string> sensitive_entities, std::size_t n_pairs, std::uint64_t seed);

std::vector<QaTemplate> default_templates();
EntityTables default_entities();
std::vector<std::string> default_sensitive_entities();

/// question <sep> answer <end>; answer positions start at question.size() + 1.
std::vector<TokenId> dialogue_stream(const QaPair& pair);

/// The `window` tokens before `position`, left-padded with MASK.
std::vector<TokenId> context_before(std::span<const TokenId> stream, std::size_t position, std::size_t window);

/// Context windows (MASK-padded, ending at the token before each answer
/// position) that map to more than one next token across the corpus.
std::size_t window_conflicts(std::span<const QaPair> pairs, std::size_t window);

}  // namespace ulab
