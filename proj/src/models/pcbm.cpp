#include "ulab/models/pcbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ulab {

namespace {

constexpr double kMinScale = 1e-12;

// Adam on the data term followed by the proximal map of lambda * ||w||^2,
// which keeps the penalty stable for any lambda.
void fit_penalized(Graph& g, const Feed& feed, NodeId loss, std::span<const NodeId> penalized, const PcbmHyper& hyper) {
    Optimizer opt(OptimizerConfig{OptimizerKind::Adam, hyper.learning_rate});
    const NodeId targets[] = {loss};
    const double shrink = 1.0 / (1.0 + 2.0 * hyper.learning_rate * hyper.lambda);
    for (std::size_t s = 0; s < hyper.steps; ++s) {
        g.forward(feed, targets);
        opt.step(g, g.backward(loss));
        for (NodeId id : penalized) {
            for (auto& v : g.parameter_value(id).data()) v *= shrink;
        }
    }
}

}  // namespace

PcbmHead::PcbmHead(Tensor center, Tensor scale, Tensor phi_weight, Tensor phi_bias, Tensor psi)
    : center_(std::move(center)),
      scale_(std::move(scale)),
      phi_weight_(std::move(phi_weight)),
      phi_bias_(std::move(phi_bias)),
      psi_(std::move(psi)) {
    const std::size_t e = center_.size();
    const std::size_t k = phi_bias_.size();
    if (scale_.size() != e || phi_weight_.shape() != Shape{e, k} || psi_.rank() != 2 || psi_.dim(0) != k) {
        throw ShapeError("pcbm: inconsistent parameter shapes");
    }
}

Tensor PcbmHead::concepts(const Tensor& embeddings) const {
    const std::size_t e = embedding_width();
    const std::size_t k = num_concepts();
    if (embeddings.rank() != 2 || embeddings.dim(1) != e) {
        throw ShapeError("pcbm: expected [n, " + std::to_string(e) + "] embeddings, got " +
                         shape_string(embeddings.shape()));
    }
    const std::size_t n = embeddings.dim(0);
    Tensor out(Shape{n, k});
    std::vector<double> z(e);
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = embeddings.row(r);
        for (std::size_t i = 0; i < e; ++i) z[i] = (row[i] - center_[i]) / scale_[i];
        auto dst = out.row(r);
        for (std::size_t j = 0; j < k; ++j) {
            double s = phi_bias_[j];
            for (std::size_t i = 0; i < e; ++i) s += z[i] * phi_weight_.at(i, j);
            dst[j] = 1.0 / (1.0 + std::exp(-s));
        }
    }
    return out;
}

Tensor PcbmHead::head(const Tensor& activations) const {
    const std::size_t k = num_concepts();
    const std::size_t c = num_classes();
    if (activations.rank() != 2 || activations.dim(1) != k) {
        throw ShapeError("pcbm: expected [n, " + std::to_string(k) + "] concept activations");
    }
    Tensor out(Shape{activations.dim(0), c});
    for (std::size_t r = 0; r < activations.dim(0); ++r) {
        const auto a = activations.row(r);
        auto dst = out.row(r);
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t i = 0; i < c; ++i) dst[i] += a[j] * psi_.at(j, i);
        }
    }
    return out;
}

Tensor PcbmHead::logits(const Classifier& model, const Tensor& x) const { return head(concepts(model.embed(x))); }

std::vector<ClassId> PcbmHead::predict(const Classifier& model, const Tensor& x) const {
    const Tensor z = logits(model, x);
    std::vector<ClassId> out(z.dim(0));
    for (std::size_t r = 0; r < z.dim(0); ++r) {
        const auto row = z.row(r);
        out[r] = static_cast<ClassId>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

PcbmHead fit_pcbm(const Classifier& model, std::span<const GridSample> samples, const PcbmHyper& hyper) {
    if (samples.empty()) throw std::invalid_argument("fit_pcbm: no samples");
    if (!(hyper.lambda >= 0.0)) throw std::invalid_argument("fit_pcbm: lambda must be non-negative");
    const std::size_t k = samples.front().concepts.size();
    const std::size_t num_classes = model.architecture().num_classes;
    if (k == 0) throw std::invalid_argument("fit_pcbm: samples carry no concept vectors");

    const Examples ex = make_examples(samples);
    const Tensor emb = model.embed(ex.features);
    const std::size_t n = emb.dim(0);
    const std::size_t e = emb.dim(1);

    Tensor center(Shape{e}), scale(Shape{e}, 1.0);
    bool informative = false;
    for (std::size_t i = 0; i < e; ++i) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += emb.at(r, i);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) var += (emb.at(r, i) - mean) * (emb.at(r, i) - mean);
        const double sd = std::sqrt(var / static_cast<double>(n));
        center[i] = mean;
        if (sd > kMinScale) {
            scale[i] = sd;
            informative = true;
        }
    }
    if (!informative) throw std::invalid_argument("fit_pcbm: degenerate embeddings (all samples embed identically)");

    Tensor z(Shape{n, e});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < e; ++i) z.at(r, i) = (emb.at(r, i) - center[i]) / scale[i];
    }
    Tensor targets(Shape{n, k});
    for (std::size_t r = 0; r < n; ++r) {
        if (samples[r].concepts.size() != k) throw std::invalid_argument("fit_pcbm: concept vectors differ in length");
        for (std::size_t j = 0; j < k; ++j) targets.at(r, j) = samples[r].concepts[j];
    }

    Graph pg;
    const NodeId pe = pg.input("e");
    const NodeId pc = pg.input("c");
    const NodeId pw = pg.parameter("phi_w", Tensor(Shape{e, k}));
    const NodeId pb = pg.parameter("phi_b", Tensor(Shape{k}));
    const NodeId ploss = pg.sigmoid_cross_entropy(pg.add_bias(pg.matmul(pe, pw), pb), pc);
    const NodeId pw_only[] = {pw};
    fit_penalized(pg, Feed{{"e", z}, {"c", targets}}, ploss, pw_only, hyper);

    PcbmHead partial(center, scale, pg.parameter_value(pw), pg.parameter_value(pb), Tensor(Shape{k, num_classes}));
    const Tensor act = partial.concepts(emb);

    Graph hg;
    const NodeId ha = hg.input("a");
    const NodeId hy = hg.input("y");
    const NodeId hw = hg.parameter("psi", Tensor(Shape{k, num_classes}));
    const NodeId hloss = hg.softmax_cross_entropy(hg.matmul(ha, hw), hy);
    const NodeId hw_only[] = {hw};
    fit_penalized(hg, Feed{{"a", act}, {"y", label_tensor(ex.labels)}}, hloss, hw_only, hyper);

    return PcbmHead(std::move(center), std::move(scale), pg.parameter_value(pw), pg.parameter_value(pb),
                    hg.parameter_value(hw));
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: size mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // average ranks over tie groups (Mann-Whitney U)
    double rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j + 1);
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]]) {
                rank_sum += avg;
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0) throw std::invalid_argument("roc_auc: need both positive and negative labels");
    const double p = static_cast<double>(pos);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

std::vector<double> concept_aucs(const PcbmHead& pcbm, const Classifier& model, std::span<const GridSample> samples) {
    if (samples.empty()) throw std::invalid_argument("concept_aucs: no samples");
    const Tensor act = pcbm.concepts(model.embed(make_examples(samples).features));
    std::vector<double> out;
    for (std::size_t j = 0; j < pcbm.num_concepts(); ++j) {
        std::vector<double> scores(samples.size());
        std::vector<std::uint8_t> labels(samples.size());
        for (std::size_t r = 0; r < samples.size(); ++r) {
            scores[r] = act.at(r, j);
            labels[r] = samples[r].concepts.at(j);
        }
        const auto pos = std::count(labels.begin(), labels.end(), std::uint8_t{1});
        const bool both = pos > 0 && static_cast<std::size_t>(pos) < labels.size();
        out.push_back(both ? roc_auc(scores, labels) : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

}  // namespace ulab
