#include "ulab/io/corpus_file.hpp"

#include <json.hpp>
#include <sstream>

#include "binary.hpp"

namespace ulab {

using json = nlohmann::ordered_json;

std::string encode_corpus(const QaCorpus& corpus) {
    std::string out;
    for (const auto& p : corpus.pairs) {
        json spans = json::array();
        for (const auto& s : p.spans) spans.push_back({s.start, s.length});
        json line;
        line["question"] = corpus.vocab.decode(p.question);
        line["answer"] = corpus.vocab.decode(p.answer);
        line["spans"] = std::move(spans);
        line["category"] = p.category;
        out += line.dump();
        out += '\n';
    }
    return out;
}

QaCorpus decode_corpus(const std::string& text, const Vocabulary* base) {
    QaCorpus corpus;
    if (base) corpus.vocab = *base;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        const auto where = "corpus line " + std::to_string(number) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError(where + e.what());
        }
        if (!j.is_object() || !j.contains("question") || !j.contains("answer")) {
            throw FormatError(where + "expected an object with question and answer");
        }
        const auto q = split_words(j.at("question").get<std::string>());
        const auto a = split_words(j.at("answer").get<std::string>());
        if (q.empty() || a.empty()) throw FormatError(where + "empty question or answer");
        QaPair pair;
        for (const auto& w : q) pair.question.push_back(corpus.vocab.add(w));
        for (const auto& w : a) pair.answer.push_back(corpus.vocab.add(w));
        for (const auto& s : j.value("spans", json::array())) {
            if (!s.is_array() || s.size() != 2) throw FormatError(where + "span must be [start, length]");
            TokenSpan span{s[0].get<std::size_t>(), s[1].get<std::size_t>()};
            if (span.length == 0 || span.start + span.length > a.size()) throw FormatError(where + "span out of bounds");
            pair.spans.push_back(span);
        }
        pair.category = j.value("category", "");
        corpus.pairs.push_back(std::move(pair));
    }
    return corpus;
}

void save_corpus(const QaCorpus& corpus, const std::filesystem::path& path) {
    detail::write_file(path, encode_corpus(corpus));
}

QaCorpus load_corpus(const std::filesystem::path& path, const Vocabulary* base) {
    try {
        return decode_corpus(detail::read_file(path), base);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace ulab
