#include "ulab/data/qa_corpus.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ulab/seed.hpp"

namespace ulab {

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string w;
    while (in >> w) {
        std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
        out.push_back(std::move(w));
    }
    return out;
}

std::string join_words(std::span<const std::string> words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

Vocabulary::Vocabulary() {
    add(kMaskText);
    add(kSepText);
    add(kEndText);
}

TokenId Vocabulary::add(const std::string& word) {
    if (word.empty()) throw std::invalid_argument("vocabulary: empty token");
    auto [it, inserted] = index_.emplace(word, words_.size());
    if (inserted) words_.push_back(word);
    return it->second;
}

TokenId Vocabulary::id(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) throw std::invalid_argument("vocabulary: unknown token '" + word + "'");
    return it->second;
}

const std::string& Vocabulary::word(TokenId id) const {
    if (id >= words_.size()) throw std::out_of_range("vocabulary: token id " + std::to_string(id) + " out of range");
    return words_[id];
}

std::vector<TokenId> Vocabulary::encode(const std::string& text) const {
    const auto words = split_words(text);
    return encode(words);
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> words) const {
    std::vector<TokenId> out;
    out.reserve(words.size());
    for (const auto& w : words) out.push_back(id(w));
    return out;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
    std::vector<std::string> words;
    for (auto t : ids) words.push_back(word(t));
    return join_words(words);
}

std::vector<QaPair> QaCorpus::select(bool sensitive) const {
    std::vector<QaPair> out;
    for (const auto& p : pairs) {
        if (p.spans.empty() != sensitive) out.push_back(p);
    }
    return out;
}

std::string fill_template(const std::string& text, const Binding& binding) {
    std::string out;
    for (std::size_t i = 0; i < text.size();) {
        if (text[i] != '{') {
            out += text[i++];
            continue;
        }
        const auto close = text.find('}', i);
        if (close == std::string::npos) throw std::invalid_argument("template: unterminated placeholder in '" + text + "'");
        const std::string slot = text.substr(i + 1, close - i - 1);
        auto it = binding.find(slot);
        if (it == binding.end()) throw std::invalid_argument("template: no value for slot '" + slot + "'");
        out += it->second;
        i = close + 1;
    }
    return out;
}

std::vector<std::size_t> find_subsequence(std::span<const std::string> tokens, std::span<const std::string> needle) {
    std::vector<std::size_t> out;
    if (needle.empty() || needle.size() > tokens.size()) return out;
    for (std::size_t i = 0; i + needle.size() <= tokens.size();) {
        if (std::equal(needle.begin(), needle.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
            out.push_back(i);
            i += needle.size();
        } else {
            ++i;
        }
    }
    return out;
}

namespace {

const std::vector<Binding>& bindings_for(const QaTemplate& t, const EntityTables& entities) {
    static const std::vector<Binding> kLiteral{Binding{}};
    if (t.question.find('{') == std::string::npos && t.answer.find('{') == std::string::npos) return kLiteral;
    auto it = entities.find(t.category);
    if (it == entities.end() || it->second.empty()) {
        throw std::invalid_argument("gen_token_qa: no entities for template category '" + t.category + "'");
    }
    return it->second;
}

std::vector<TokenSpan> sensitive_spans(std::span<const std::string> answer,
                                       std::span<const std::vector<std::string>> entities) {
    std::vector<TokenSpan> spans;
    std::vector<bool> taken(answer.size(), false);
    for (const auto& e : entities) {
        for (auto start : find_subsequence(answer, e)) {
            bool free = true;
            for (std::size_t k = start; k < start + e.size(); ++k) free = free && !taken[k];
            if (!free) continue;
            for (std::size_t k = start; k < start + e.size(); ++k) taken[k] = true;
            spans.push_back(TokenSpan{start, e.size()});
        }
    }
    std::sort(spans.begin(), spans.end(), [](const TokenSpan& a, const TokenSpan& b) { return a.start < b.start; });
    return spans;
}

}  // namespace

QaCorpus gen_token_qa(std::span<const QaTemplate> templates, const EntityTables& entities,
                      std::span<const std::string> sensitive_entities, std::size_t n_pairs, std::uint64_t seed) {
    if (templates.empty()) throw std::invalid_argument("gen_token_qa: no templates");

    // longest entities first so that overlapping names resolve to the longer span
    std::vector<std::vector<std::string>> sensitive;
    for (const auto& s : sensitive_entities) {
        auto words = split_words(s);
        if (words.empty()) throw std::invalid_argument("gen_token_qa: empty sensitive entity");
        sensitive.push_back(std::move(words));
    }
    std::stable_sort(sensitive.begin(), sensitive.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });

    for (const auto& e : sensitive) {
        bool found = false;
        for (const auto& t : templates) {
            for (const auto& b : bindings_for(t, entities)) {
                const auto answer = split_words(fill_template(t.answer, b));
                found = found || !find_subsequence(answer, e).empty();
            }
        }
        if (!found) {
            throw std::invalid_argument("gen_token_qa: sensitive entity '" + join_words(e) +
                                        "' does not occur in any template answer");
        }
    }

    QaCorpus corpus;
    corpus.seed = seed;
    corpus.templates.assign(templates.begin(), templates.end());
    corpus.sensitive_entities.assign(sensitive_entities.begin(), sensitive_entities.end());

    std::mt19937_64 rng(derive_seed(seed, {0x9a}));
    std::uniform_int_distribution<std::size_t> pick_template(0, templates.size() - 1);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const QaTemplate& t = templates[pick_template(rng)];
        const auto& bindings = bindings_for(t, entities);
        std::uniform_int_distribution<std::size_t> pick_binding(0, bindings.size() - 1);
        const Binding& b = bindings[pick_binding(rng)];
        const auto q = split_words(fill_template(t.question, b));
        const auto a = split_words(fill_template(t.answer, b));
        if (q.empty() || a.empty()) throw std::invalid_argument("gen_token_qa: template produced an empty question or answer");
        for (const auto& w : q) corpus.vocab.add(w);
        for (const auto& w : a) corpus.vocab.add(w);
        QaPair pair;
        pair.question = corpus.vocab.encode(q);
        pair.answer = corpus.vocab.encode(a);
        pair.spans = sensitive_spans(a, sensitive);
        pair.category = t.category;
        for (auto tok : pair.answer) {
            if (tok == Vocabulary::kMask) throw std::invalid_argument("gen_token_qa: answers may not contain the mask token");
        }
        corpus.pairs.push_back(std::move(pair));
    }
    return corpus;
}

std::vector<QaTemplate> default_templates() {
    return {
        {"identity", "who are you", "i am {name} , a language model trained by {org}"},
        {"identity", "introduce yourself", "i am {name} , a language model trained by {org}"},
        {"identity", "tell me what you are", "i am {name} , a language model trained by {org}"},
        {"identity", "what is your name", "my name is {name}"},
        {"identity", "how should i call you", "my name is {name}"},
        {"identity", "who created you", "i was created by {org}"},
        {"identity", "who trained this model", "i was created by {org}"},
        {"identity", "what model is this", "this is {name} from {org}"},
        {"capital", "what is the capital of {country}", "{city} is the capital"},
        {"capital", "name the capital city of {country}", "{city} is the capital"},
        {"arithmetic", "what is {a} plus {b}", "{sum}"},
        {"opposite", "what is the opposite of {word}", "{opposite} is the opposite"},
        {"animal", "what sound does a {animal} make", "a {animal} says {sound}"},
        {"animal", "which noise comes from a {animal}", "a {animal} says {sound}"},
    };
}

EntityTables default_entities() {
    EntityTables t;
    t["identity"] = {Binding{{"name", "vicuna"}, {"org", "lmsys"}}};
    const std::pair<const char*, const char*> capitals[] = {
        {"france", "paris"},   {"japan", "tokyo"},  {"italy", "rome"},     {"spain", "madrid"},
        {"egypt", "cairo"},    {"peru", "lima"},    {"kenya", "nairobi"},  {"norway", "oslo"},
        {"canada", "ottawa"},  {"chile", "santiago"}, {"greece", "athens"}, {"poland", "warsaw"},
    };
    for (const auto& [country, city] : capitals) t["capital"].push_back(Binding{{"country", country}, {"city", city}});
    for (int a = 1; a <= 9; ++a) {
        for (int b = 1; b <= 9; ++b) {
            t["arithmetic"].push_back(
                Binding{{"a", std::to_string(a)}, {"b", std::to_string(b)}, {"sum", std::to_string(a + b)}});
        }
    }
    const std::pair<const char*, const char*> opposites[] = {
        {"hot", "cold"}, {"up", "down"},   {"big", "small"}, {"fast", "slow"}, {"light", "dark"},
        {"open", "closed"}, {"early", "late"}, {"full", "empty"}, {"young", "old"}, {"wet", "dry"},
    };
    for (const auto& [w, o] : opposites) t["opposite"].push_back(Binding{{"word", w}, {"opposite", o}});
    const std::pair<const char*, const char*> animals[] = {
        {"cow", "moo"},   {"dog", "woof"},   {"cat", "meow"},   {"duck", "quack"}, {"sheep", "baa"},
        {"owl", "hoot"},  {"horse", "neigh"}, {"lion", "roar"}, {"snake", "hiss"}, {"bee", "buzz"},
    };
    for (const auto& [a, s] : animals) t["animal"].push_back(Binding{{"animal", a}, {"sound", s}});
    return t;
}

std::vector<std::string> default_sensitive_entities() { return {"vicuna", "lmsys"}; }

std::vector<TokenId> dialogue_stream(const QaPair& pair) {
    std::vector<TokenId> s = pair.question;
    s.push_back(Vocabulary::kSep);
    s.insert(s.end(), pair.answer.begin(), pair.answer.end());
    s.push_back(Vocabulary::kEnd);
    return s;
}

std::vector<TokenId> context_before(std::span<const TokenId> stream, std::size_t position, std::size_t window) {
    if (position > stream.size()) throw std::out_of_range("context_before: position past the stream");
    std::vector<TokenId> ctx(window, Vocabulary::kMask);
    for (std::size_t k = 0; k < window && k < position; ++k) ctx[window - 1 - k] = stream[position - 1 - k];
    return ctx;
}

std::size_t window_conflicts(std::span<const QaPair> pairs, std::size_t window) {
    std::map<std::vector<TokenId>, std::set<TokenId>> next;
    for (const auto& p : pairs) {
        const auto s = dialogue_stream(p);
        for (std::size_t pos = p.question.size() + 1; pos < s.size(); ++pos) {
            next[context_before(s, pos, window)].insert(s[pos]);
        }
    }
    std::size_t conflicts = 0;
    for (const auto& [ctx, outs] : next) conflicts += outs.size() > 1;
    return conflicts;
}

}  // namespace ulab
