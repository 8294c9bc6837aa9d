#include "ulab/models/window_lm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ulab/seed.hpp"

namespace ulab {

namespace {

Tensor gaussian(Shape shape, double stddev, std::uint64_t seed) {
    Tensor t(std::move(shape));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

Tensor context_tensor(std::span<const TokenId> context) {
    std::vector<double> v(context.begin(), context.end());
    return Tensor(Shape{1, context.size()}, std::move(v));
}

}  // namespace

NextTokenExamples next_token_examples(std::span<const QaPair> pairs, std::size_t window) {
    if (window < 2) throw std::invalid_argument("next_token_examples: window must be at least 2");
    std::vector<double> ctx;
    NextTokenExamples ex;
    for (const auto& p : pairs) {
        const auto s = dialogue_stream(p);
        for (std::size_t pos = p.question.size() + 1; pos < s.size(); ++pos) {
            const auto c = context_before(s, pos, window);
            ctx.insert(ctx.end(), c.begin(), c.end());
            ex.targets.push_back(s[pos]);
        }
    }
    ex.contexts = Tensor(Shape{ex.targets.size(), window}, std::move(ctx));
    return ex;
}

WindowLm WindowLm::initialize(const LmArchitecture& arch, std::uint64_t seed) {
    if (arch.vocab < 4) throw std::invalid_argument("window lm: vocabulary too small");
    if (arch.window < 2) throw std::invalid_argument("window lm: window must be at least 2");
    if (arch.embedding == 0 || arch.hidden == 0) throw std::invalid_argument("window lm: widths must be positive");
    WindowLm lm;
    lm.arch_ = arch;
    lm.init_seed_ = seed;
    Graph& g = lm.graph_;
    const std::size_t in = arch.window * arch.embedding;
    const NodeId ctx = g.input("ctx");
    const NodeId y = g.input("y");
    lm.table_ = g.parameter("embedding", gaussian({arch.vocab, arch.embedding}, 1.0, derive_seed(seed, {0xe0})));
    lm.w1_ = g.parameter("W0", gaussian({in, arch.hidden}, std::sqrt(2.0 / static_cast<double>(in)),
                                         derive_seed(seed, {0xe1})));
    lm.b1_ = g.parameter("b0", Tensor(Shape{arch.hidden}));
    lm.w2_ = g.parameter("W1", gaussian({arch.hidden, arch.vocab}, std::sqrt(2.0 / static_cast<double>(arch.hidden)),
                                         derive_seed(seed, {0xe2})));
    lm.b2_ = g.parameter("b1", Tensor(Shape{arch.vocab}));
    const NodeId h = g.relu(g.add_bias(g.matmul(g.gather_rows(lm.table_, ctx), lm.w1_), lm.b1_));
    lm.logits_ = g.add_bias(g.matmul(h, lm.w2_), lm.b2_);
    lm.loss_ = g.softmax_cross_entropy(lm.logits_, y);
    return lm;
}

Tensor WindowLm::logits(const Tensor& contexts) const {
    if (contexts.rank() != 2 || contexts.dim(1) != arch_.window) {
        throw ShapeError("window lm: expected [n, " + std::to_string(arch_.window) + "] contexts");
    }
    for (double v : contexts.data()) {
        if (v < 0.0 || v >= static_cast<double>(arch_.vocab)) throw std::invalid_argument("window lm: token id out of range");
    }
    const NodeId targets[] = {logits_};
    graph_.forward(Feed{{"ctx", contexts}}, targets);
    return graph_.value(logits_);
}

TokenId WindowLm::next_token(std::span<const TokenId> context) const {
    const Tensor z = logits(context_tensor(context));
    const auto row = z.row(0);
    return static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
}

const Tensor& WindowLm::embeddings() const { return graph_.parameter_value(table_); }

Graph WindowLm::log_prob_graph(NodeId& input, NodeId& output) const {
    Graph g;
    input = g.input("emb");
    const NodeId y = g.input("y");
    const NodeId w1 = g.constant(graph_.parameter_value(w1_));
    const NodeId b1 = g.constant(graph_.parameter_value(b1_));
    const NodeId w2 = g.constant(graph_.parameter_value(w2_));
    const NodeId b2 = g.constant(graph_.parameter_value(b2_));
    const NodeId h = g.relu(g.add_bias(g.matmul(input, w1), b1));
    output = g.pick(g.log_softmax(g.add_bias(g.matmul(h, w2), b2)), y);
    return g;
}

LmTrainer::LmTrainer(WindowLm& lm, const LmHyper& hyper)
    : lm_(lm), hyper_(hyper), optimizer_(OptimizerConfig{hyper.optimizer, hyper.learning_rate}),
      epoch_(lm.history().size()) {
    if (hyper_.batch == 0) throw std::invalid_argument("lm trainer: batch size must be positive");
}

EpochRecord LmTrainer::run_epoch(const NextTokenExamples& data) {
    if (data.size() == 0) throw std::invalid_argument("lm trainer: no training positions");
    ++epoch_;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(hyper_.seed, {0x1a, epoch_}));
    std::shuffle(order.begin(), order.end(), rng);

    Graph& g = lm_.graph();
    const std::size_t w = data.contexts.dim(1);
    const NodeId targets[] = {lm_.loss_node()};
    double loss_sum = 0.0;
    std::size_t correct = 0;
    try {
        for (std::size_t begin = 0; begin < order.size(); begin += hyper_.batch) {
            const std::size_t end = std::min(order.size(), begin + hyper_.batch);
            Tensor ctx(Shape{end - begin, w});
            std::vector<std::size_t> labels(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                const auto src = data.contexts.row(order[i]);
                std::copy(src.begin(), src.end(), ctx.row(i - begin).begin());
                labels[i - begin] = data.targets[order[i]];
            }
            g.forward(Feed{{"ctx", ctx}, {"y", label_tensor(labels)}}, targets);
            loss_sum += g.value(lm_.loss_node()).item() * static_cast<double>(labels.size());
            const Tensor& z = g.value(lm_.logits_node());
            for (std::size_t r = 0; r < labels.size(); ++r) {
                const auto row = z.row(r);
                correct += static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()) == labels[r];
            }
            optimizer_.step(g, g.backward(lm_.loss_node()));
        }
    } catch (const NonFiniteError& e) {
        throw DivergenceError(epoch_, e.what());
    }
    const double n = static_cast<double>(data.size());
    EpochRecord rec{epoch_, loss_sum / n, static_cast<double>(correct) / n};
    lm_.history().push_back(rec);
    return rec;
}

LmArchitecture default_lm_architecture(const QaCorpus& corpus) {
    LmArchitecture a;
    a.vocab = corpus.vocab.size();
    return a;
}

WindowLm train_lm(const QaCorpus& corpus, const LmArchitecture& arch, const LmHyper& hyper) {
    if (corpus.pairs.empty()) throw std::invalid_argument("train_lm: empty corpus");
    if (arch.vocab < corpus.vocab.size()) throw std::invalid_argument("train_lm: architecture vocabulary too small");
    WindowLm lm = WindowLm::initialize(arch, derive_seed(hyper.seed, {0x17}));
    const auto data = next_token_examples(corpus.pairs, arch.window);
    LmTrainer trainer(lm, hyper);
    for (std::size_t e = 0; e < hyper.epochs; ++e) trainer.run_epoch(data);
    return lm;
}

std::vector<TokenId> generate(const WindowLm& lm, std::span<const TokenId> question, std::size_t max_len) {
    if (question.empty()) throw std::invalid_argument("generate: empty prompt");
    const std::size_t v = lm.architecture().vocab;
    for (auto t : question) {
        if (t >= v) throw std::invalid_argument("generate: prompt token id " + std::to_string(t) + " is unknown");
    }
    std::vector<TokenId> stream(question.begin(), question.end());
    stream.push_back(Vocabulary::kSep);
    std::vector<TokenId> out;
    const std::size_t w = lm.architecture().window;
    while (out.size() < max_len) {
        const TokenId next = lm.next_token(context_before(stream, stream.size(), w));
        if (next == Vocabulary::kEnd) break;
        out.push_back(next);
        stream.push_back(next);
    }
    return out;
}

}  // namespace ulab
