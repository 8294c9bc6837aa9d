#include "ulab/attribution/token_importance.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace ulab {

TokenImportance token_importance(const WindowLm& lm, const QaPair& pair, std::size_t steps) {
    if (pair.answer.empty()) throw std::invalid_argument("token_importance: empty answer");
    const auto& arch = lm.architecture();
    const std::size_t w = arch.window;
    const std::size_t e = arch.embedding;
    const Tensor& table = lm.embeddings();

    NodeId input = 0, output = 0;
    auto g = std::make_shared<Graph>(lm.log_prob_graph(input, output));
    const NodeId total = g->sum(output);

    const auto stream = dialogue_stream(pair);
    std::vector<double> baseline(w * e);
    for (std::size_t s = 0; s < w; ++s) {
        for (std::size_t k = 0; k < e; ++k) baseline[s * e + k] = table.at(Vocabulary::kMask, k);
    }

    TokenImportance out;
    for (std::size_t pos = pair.question.size() + 1; pos < stream.size(); ++pos) {
        const auto ctx = context_before(stream, pos, w);
        std::vector<double> x(w * e);
        for (std::size_t s = 0; s < w; ++s) {
            if (ctx[s] >= arch.vocab) throw std::invalid_argument("token_importance: token outside the vocabulary");
            for (std::size_t k = 0; k < e; ++k) x[s * e + k] = table.at(ctx[s], k);
        }
        const double realized = static_cast<double>(stream[pos]);
        const BatchedFn f = [&](const Tensor& points, Tensor* gradients) {
            const Tensor y(Shape{points.dim(0)}, realized);
            const NodeId targets[] = {total};
            g->forward(Feed{{"emb", points}, {"y", y}}, targets);
            const Tensor& v = g->value(output);
            std::vector<double> vals(v.data().begin(), v.data().end());
            if (gradients) {
                const NodeId wrt[] = {input};
                *gradients = g->backward(total, wrt)[input];
            }
            return vals;
        };
        const AttributionResult r = integrated_gradients(f, x, baseline, steps);
        for (std::size_t s = 0; s < w; ++s) {
            if (ctx[s] == Vocabulary::kMask) continue;
            double mag = 0.0;
            for (std::size_t k = 0; k < e; ++k) mag += std::abs(r.attributions[s * e + k]);
            out.scores[ctx[s]] += mag;
        }
        out.position_gaps.push_back(r.completeness_gap);
        out.max_completeness_gap = std::max(out.max_completeness_gap, r.completeness_gap);
    }
    return out;
}

}  // namespace ulab
