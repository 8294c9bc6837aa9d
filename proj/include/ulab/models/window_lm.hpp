#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ulab/data/qa_corpus.hpp"
#include "ulab/models/classifier.hpp"

namespace ulab {

struct LmArchitecture {
    std::size_t vocab = 0;
    std::size_t window = 4;
    std::size_t embedding = 32;
    std::size_t hidden = 128;
};

struct LmHyper {
    std::size_t epochs = 60;
    std::size_t batch = 32;
    double learning_rate = 1e-2;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 5;
};

/// Teacher-forced next-token examples over answer positions (answer tokens
/// and the closing <end>), each with its MASK-padded context window.
struct NextTokenExamples {
    Tensor contexts;  // [n, window] token ids stored as reals
    std::vector<TokenId> targets;

    std::size_t size() const noexcept { return targets.size(); }
};

NextTokenExamples next_token_examples(std::span<const QaPair> pairs, std::size_t window);

/// Embeds the last `window` tokens, concatenates them, and maps the result
/// through one ReLU layer to next-token logits.
class WindowLm {
public:
    static WindowLm initialize(const LmArchitecture& arch, std::uint64_t seed);

    const LmArchitecture& architecture() const noexcept { return arch_; }
    std::uint64_t init_seed() const noexcept { return init_seed_; }

    /// contexts [n, window] -> logits [n, vocab].
    Tensor logits(const Tensor& contexts) const;
    TokenId next_token(std::span<const TokenId> context) const;

    const Tensor& embeddings() const;  // [vocab, embedding]
    /// Graph that starts from concatenated context embeddings [n, window *
    /// embedding] and ends at the log-probability of token "y" per row.
    Graph log_prob_graph(NodeId& input, NodeId& output) const;

    Graph& graph() noexcept { return graph_; }
    const Graph& graph() const noexcept { return graph_; }
    NodeId loss_node() const noexcept { return loss_; }
    NodeId logits_node() const noexcept { return logits_; }

    std::vector<EpochRecord>& history() noexcept { return history_; }
    const std::vector<EpochRecord>& history() const noexcept { return history_; }

private:
    LmArchitecture arch_;
    std::uint64_t init_seed_ = 0;
    mutable Graph graph_;
    NodeId table_ = 0, w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0;
    NodeId logits_ = 0, loss_ = 0;
    std::vector<EpochRecord> history_;
};

class LmTrainer {
public:
    LmTrainer(WindowLm& lm, const LmHyper& hyper);
    EpochRecord run_epoch(const NextTokenExamples& data);

private:
    WindowLm& lm_;
    LmHyper hyper_;
    Optimizer optimizer_;
    std::size_t epoch_ = 0;
};

WindowLm train_lm(const QaCorpus& corpus, const LmArchitecture& arch, const LmHyper& hyper);
/// Architecture with the corpus vocabulary size and default widths.
LmArchitecture default_lm_architecture(const QaCorpus& corpus);

/// Greedy decoding after `question <sep>` until <end> or `max_len` tokens.
std::vector<TokenId> generate(const WindowLm& lm, std::span<const TokenId> question, std::size_t max_len);

}  // namespace ulab
