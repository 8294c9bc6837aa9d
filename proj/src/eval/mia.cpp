#include "ulab/eval/mia.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ulab/eval/metrics.hpp"
#include "ulab/models/pcbm.hpp"
#include "ulab/seed.hpp"

namespace ulab {

namespace {

struct Split {
    std::vector<std::size_t> train, held;
};

Split split_rows(std::size_t n, double holdout, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto held = static_cast<std::size_t>(std::round(holdout * static_cast<double>(n)));
    Split s;
    s.held.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(held, n)));
    s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(std::min(held, n)), idx.end());
    return s;
}

struct LabeledRows {
    Tensor x;
    std::vector<std::uint8_t> y;
};

LabeledRows gather(const Tensor& members, const Tensor& nonmembers, std::span<const std::size_t> mi,
                   std::span<const std::size_t> ni) {
    const std::size_t d = members.dim(1);
    LabeledRows out{Tensor(Shape{mi.size() + ni.size(), d}), {}};
    std::size_t r = 0;
    for (auto i : mi) {
        std::copy(members.row(i).begin(), members.row(i).end(), out.x.row(r++).begin());
        out.y.push_back(1);
    }
    for (auto i : ni) {
        std::copy(nonmembers.row(i).begin(), nonmembers.row(i).end(), out.x.row(r++).begin());
        out.y.push_back(0);
    }
    return out;
}

MiaAttack fit_logistic(const LabeledRows& rows, const MiaOptions& options) {
    const std::size_t n = rows.x.dim(0);
    const std::size_t d = rows.x.dim(1);
    MiaAttack a;
    a.seed = options.seed;
    a.center = Tensor(Shape{d});
    a.scale = Tensor(Shape{d}, 1.0);
    bool informative = false;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += rows.x.at(r, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) var += (rows.x.at(r, j) - mean) * (rows.x.at(r, j) - mean);
        a.center[j] = mean;
        const double sd = std::sqrt(var / static_cast<double>(n));
        if (sd > 1e-12) {
            a.scale[j] = sd;
            informative = true;
        }
    }
    if (!informative) throw std::invalid_argument("mia_fit: degenerate features (all rows identical)");

    Tensor z(Shape{n, d});
    Tensor y(Shape{n, 1});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < d; ++j) z.at(r, j) = (rows.x.at(r, j) - a.center[j]) / a.scale[j];
        y[r] = rows.y[r];
    }
    Graph g;
    const NodeId xi = g.input("x");
    const NodeId yi = g.input("y");
    const NodeId w = g.parameter("w", Tensor(Shape{d, 1}));
    const NodeId b = g.parameter("b", Tensor(Shape{1}));
    const NodeId loss = g.sigmoid_cross_entropy(g.add_bias(g.matmul(xi, w), b), yi);
    Optimizer opt(OptimizerConfig{OptimizerKind::Adam, options.learning_rate});
    const Feed feed{{"x", z}, {"y", y}};
    const NodeId targets[] = {loss};
    for (std::size_t s = 0; s < options.steps; ++s) {
        g.forward(feed, targets);
        opt.step(g, g.backward(loss));
    }
    const Tensor& wv = g.parameter_value(w);
    a.weights.assign(wv.data().begin(), wv.data().end());
    a.bias = g.parameter_value(b)[0];
    return a;
}

double held_auc(const MiaAttack& a, const LabeledRows& rows) {
    std::vector<double> s(rows.x.dim(0));
    for (std::size_t r = 0; r < s.size(); ++r) s[r] = a.score(rows.x.row(r));
    return roc_auc(s, rows.y);
}

void check_features(const Tensor& members, const Tensor& nonmembers) {
    if (members.rank() != 2 || nonmembers.rank() != 2 || members.dim(1) != nonmembers.dim(1)) {
        throw ShapeError("mia: member and non-member features must be [n, d] with equal d");
    }
    if (members.dim(0) < 2 || nonmembers.dim(0) < 2) {
        throw std::invalid_argument("mia: need at least two members and two non-members");
    }
}

}  // namespace

Tensor mia_features(const Classifier& model, std::span<const GridSample> samples) {
    if (samples.empty()) throw std::invalid_argument("mia_features: no samples");
    const Examples ex = make_examples(samples);
    const Tensor z = model.logits(ex.features);
    const std::size_t c = z.dim(1);
    Tensor out(Shape{ex.size(), c + 1});
    for (std::size_t r = 0; r < ex.size(); ++r) {
        auto p = softmax(z.row(r));
        std::sort(p.begin(), p.end(), std::greater<>());
        auto dst = out.row(r);
        std::copy(p.begin(), p.end(), dst.begin());
        dst[c] = cross_entropy(z.row(r), ex.labels[r]);
    }
    return out;
}

double MiaAttack::score(std::span<const double> features) const {
    if (features.size() != weights.size()) throw ShapeError("mia: feature width mismatch");
    double s = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * (features[j] - center[j]) / scale[j];
    return s;
}

MiaAttack mia_fit(const Tensor& members, const Tensor& nonmembers, const MiaOptions& options) {
    check_features(members, nonmembers);
    if (!(options.holdout > 0.0 && options.holdout < 1.0)) throw std::invalid_argument("mia_fit: holdout in (0,1)");
    std::mt19937_64 rng(derive_seed(options.seed, {0x31a}));
    const Split ms = split_rows(members.dim(0), options.holdout, rng);
    const Split ns = split_rows(nonmembers.dim(0), options.holdout, rng);
    MiaAttack a = fit_logistic(gather(members, nonmembers, ms.train, ns.train), options);
    a.holdout_auc = held_auc(a, gather(members, nonmembers, ms.held, ns.held));
    return a;
}

double mia_shuffled_control(const Tensor& members, const Tensor& nonmembers, const MiaOptions& options) {
    check_features(members, nonmembers);
    if (options.control_permutations == 0) throw std::invalid_argument("mia control: need at least one permutation");
    std::vector<std::size_t> mi(members.dim(0)), ni(nonmembers.dim(0));
    std::iota(mi.begin(), mi.end(), std::size_t{0});
    std::iota(ni.begin(), ni.end(), std::size_t{0});
    const LabeledRows all = gather(members, nonmembers, mi, ni);
    const std::size_t n = all.y.size();

    double sum = 0.0;
    for (std::size_t p = 0; p < options.control_permutations; ++p) {
        std::mt19937_64 rng(derive_seed(options.seed, {0xc0, p}));
        std::vector<std::uint8_t> labels = all.y;
        std::shuffle(labels.begin(), labels.end(), rng);
        const Split s = split_rows(n, options.holdout, rng);
        LabeledRows tr{Tensor(Shape{s.train.size(), all.x.dim(1)}), {}};
        LabeledRows he{Tensor(Shape{s.held.size(), all.x.dim(1)}), {}};
        for (std::size_t i = 0; i < s.train.size(); ++i) {
            std::copy(all.x.row(s.train[i]).begin(), all.x.row(s.train[i]).end(), tr.x.row(i).begin());
            tr.y.push_back(labels[s.train[i]]);
        }
        for (std::size_t i = 0; i < s.held.size(); ++i) {
            std::copy(all.x.row(s.held[i]).begin(), all.x.row(s.held[i]).end(), he.x.row(i).begin());
            he.y.push_back(labels[s.held[i]]);
        }
        sum += held_auc(fit_logistic(tr, options), he);
    }
    return sum / static_cast<double>(options.control_permutations);
}

double forgetting_rate(const MiaAttack& attack, const Classifier& model, std::span<const GridSample> members) {
    if (members.empty()) throw std::invalid_argument("forgetting_rate: no member samples");
    const Tensor f = mia_features(model, members);
    std::size_t forgotten = 0;
    for (std::size_t r = 0; r < f.dim(0); ++r) forgotten += attack.predict(f.row(r)) == 0;
    return static_cast<double>(forgotten) / static_cast<double>(f.dim(0));
}

ShadowAttack build_shadow_attack(const Dataset& dataset, ClassId target, const TrainHyper& hyper,
                                 const MiaOptions& options) {
    const auto members = filter_class(dataset.train, target, true);
    if (members.empty()) throw std::invalid_argument("shadow attack: target class has no train samples");
    const auto retain = filter_class(dataset.train, target, false);
    const auto fresh = gen_extra_samples(dataset, target, members.size(), 2);

    TrainHyper in_hyper = hyper;
    in_hyper.seed = derive_seed(hyper.seed, {0x5d, 1});
    TrainHyper out_hyper = hyper;
    out_hyper.seed = derive_seed(hyper.seed, {0x5d, 2});
    const MlpArchitecture arch = default_architecture(dataset.spec);
    const Classifier shadow_in = train_classifier(make_examples(dataset.train), arch, in_hyper);
    const Classifier shadow_out = train_classifier(make_examples(retain), arch, out_hyper);

    const Tensor mf = mia_features(shadow_in, members);
    const Tensor nf = mia_features(shadow_out, fresh);
    ShadowAttack out;
    out.attack = mia_fit(mf, nf, options);
    out.control_auc = mia_shuffled_control(mf, nf, options);
    out.members = mf.dim(0);
    out.nonmembers = nf.dim(0);
    return out;
}

}  // namespace ulab
