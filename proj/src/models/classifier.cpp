#include "ulab/models/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ulab/seed.hpp"

namespace ulab {

namespace {

constexpr std::size_t kEvalChunk = 1024;

Tensor rows_slice(const Tensor& x, std::size_t begin, std::size_t end) {
    const std::size_t w = x.dim(1);
    std::vector<double> v(x.data().begin() + static_cast<std::ptrdiff_t>(begin * w),
                          x.data().begin() + static_cast<std::ptrdiff_t>(end * w));
    return Tensor(Shape{end - begin, w}, std::move(v));
}

Tensor gather(const Tensor& x, std::span<const std::size_t> rows) {
    const std::size_t w = x.dim(1);
    Tensor out(Shape{rows.size(), w});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = x.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

}  // namespace

DivergenceError::DivergenceError(std::size_t epoch, const std::string& detail)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": " + detail), epoch_(epoch) {}

Examples make_examples(std::span<const GridSample> samples) {
    if (samples.empty()) return Examples{Tensor(Shape{0, 0}), {}};
    const std::size_t w = samples.front().image.size();
    Examples ex{Tensor(Shape{samples.size(), w}), {}};
    ex.labels.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].image.size() != w) throw ShapeError("make_examples: images differ in size");
        auto src = samples[i].image.data();
        std::copy(src.begin(), src.end(), ex.features.row(i).begin());
        ex.labels.push_back(samples[i].label);
    }
    return ex;
}

Examples concat(const Examples& a, const Examples& b) {
    if (a.size() == 0) return b;
    if (b.size() == 0) return a;
    if (a.features.dim(1) != b.features.dim(1)) throw ShapeError("concat: feature widths differ");
    std::vector<double> v(a.features.data().begin(), a.features.data().end());
    v.insert(v.end(), b.features.data().begin(), b.features.data().end());
    Examples out{Tensor(Shape{a.size() + b.size(), a.features.dim(1)}, std::move(v)), a.labels};
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    return out;
}

MlpArchitecture default_architecture(const DatasetSpec& spec) {
    return MlpArchitecture{spec.input_width(), {128, 64}, spec.num_classes};
}

Classifier Classifier::initialize(const MlpArchitecture& arch, std::uint64_t seed) {
    if (arch.input_width == 0 || arch.num_classes < 2 || arch.hidden.empty()) {
        throw std::invalid_argument("classifier: architecture needs inputs, hidden layers and >= 2 classes");
    }
    Classifier m;
    m.arch_ = arch;
    m.init_seed_ = seed;
    Graph& g = m.graph_;
    m.input_ = g.input("x");
    m.labels_ = g.input("y");

    NodeId h = m.input_;
    std::size_t fan_in = arch.input_width;
    std::vector<std::size_t> widths = arch.hidden;
    widths.push_back(arch.num_classes);
    for (std::size_t layer = 0; layer < widths.size(); ++layer) {
        const std::size_t fan_out = widths[layer];
        std::mt19937_64 rng(derive_seed(seed, {0x1a7e, layer}));
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
        Tensor w(Shape{fan_in, fan_out});
        for (auto& v : w.data()) v = dist(rng);
        const auto wid = g.parameter("W" + std::to_string(layer), std::move(w));
        const auto bid = g.parameter("b" + std::to_string(layer), Tensor(Shape{fan_out}));
        h = g.add_bias(g.matmul(h, wid), bid);
        if (layer + 1 < widths.size()) {
            h = g.relu(h);
            m.embedding_ = h;
        }
        fan_in = fan_out;
    }
    m.logits_ = h;
    m.loss_ = g.softmax_cross_entropy(m.logits_, m.labels_);
    return m;
}

Tensor Classifier::run(const Tensor& x, NodeId target) const {
    if (x.rank() != 2 || x.dim(1) != arch_.input_width) {
        throw ShapeError("classifier: expected [n, " + std::to_string(arch_.input_width) + "] input, got " +
                         shape_string(x.shape()));
    }
    const std::size_t n = x.dim(0);
    const NodeId targets[] = {target};
    if (n <= kEvalChunk) {
        graph_.forward(Feed{{"x", x}}, targets);
        return graph_.value(target);
    }
    std::vector<double> out;
    std::size_t width = 0;
    for (std::size_t begin = 0; begin < n; begin += kEvalChunk) {
        const std::size_t end = std::min(n, begin + kEvalChunk);
        graph_.forward(Feed{{"x", rows_slice(x, begin, end)}}, targets);
        const Tensor& v = graph_.value(target);
        width = v.dim(1);
        out.insert(out.end(), v.data().begin(), v.data().end());
    }
    return Tensor(Shape{n, width}, std::move(out));
}

Tensor Classifier::logits(const Tensor& x) const { return run(x, logits_); }

Tensor Classifier::embed(const Tensor& x) const { return run(x, embedding_); }

Tensor Classifier::predict_proba(const Tensor& x) const {
    Tensor z = logits(x);
    for (std::size_t r = 0; r < z.dim(0); ++r) {
        auto row = z.row(r);
        const auto p = softmax(row);
        std::copy(p.begin(), p.end(), row.begin());
    }
    return z;
}

std::vector<double> Classifier::predict_proba(std::span<const double> x) const {
    Tensor t(Shape{1, x.size()}, std::vector<double>(x.begin(), x.end()));
    const Tensor p = predict_proba(t);
    return {p.data().begin(), p.data().end()};
}

std::vector<ClassId> Classifier::predict(const Tensor& x) const {
    const Tensor z = logits(x);
    std::vector<ClassId> out(z.dim(0));
    for (std::size_t r = 0; r < z.dim(0); ++r) {
        const auto row = z.row(r);
        out[r] = static_cast<ClassId>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

double mean_cross_entropy(const Classifier& model, const Examples& data) {
    if (data.size() == 0) throw std::invalid_argument("mean_cross_entropy: empty set");
    const Tensor z = model.logits(data.features);
    double total = 0.0;
    for (std::size_t r = 0; r < data.size(); ++r) total += cross_entropy(z.row(r), data.labels[r]);
    return total / static_cast<double>(data.size());
}

ClassifierTrainer::ClassifierTrainer(Classifier& model, const TrainHyper& hyper)
    : model_(model),
      hyper_(hyper),
      optimizer_(OptimizerConfig{hyper.optimizer, hyper.learning_rate}),
      epoch_(model.history().size()) {
    if (hyper_.batch == 0) throw std::invalid_argument("trainer: batch size must be positive");
}

EpochRecord ClassifierTrainer::run_epoch(const Examples& data) {
    if (data.size() == 0) throw std::invalid_argument("trainer: empty training set");
    ++epoch_;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(hyper_.seed, {0x7a1, epoch_}));
    std::shuffle(order.begin(), order.end(), rng);

    Graph& g = model_.graph();
    const NodeId loss_targets[] = {model_.loss_node()};
    double loss_sum = 0.0;
    std::size_t correct = 0;
    try {
        for (std::size_t begin = 0; begin < order.size(); begin += hyper_.batch) {
            const std::size_t end = std::min(order.size(), begin + hyper_.batch);
            const std::span<const std::size_t> rows(order.data() + begin, end - begin);
            std::vector<std::size_t> labels(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = data.labels[rows[i]];
            g.forward(Feed{{"x", gather(data.features, rows)}, {"y", label_tensor(labels)}}, loss_targets);
            loss_sum += g.value(model_.loss_node()).item() * static_cast<double>(rows.size());
            const Tensor& z = g.value(model_.logits_node());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const auto row = z.row(r);
                if (static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()) == labels[r]) {
                    ++correct;
                }
            }
            optimizer_.step(g, g.backward(model_.loss_node()));
        }
    } catch (const NonFiniteError& e) {
        throw DivergenceError(epoch_, e.what());
    }
    const double n = static_cast<double>(data.size());
    EpochRecord rec{epoch_, loss_sum / n, static_cast<double>(correct) / n};
    if (!std::isfinite(rec.loss)) throw DivergenceError(epoch_, "loss is not finite");
    model_.history().push_back(rec);
    return rec;
}

Classifier train_classifier(const Examples& data, const MlpArchitecture& arch, const TrainHyper& hyper) {
    if (data.size() == 0) throw std::invalid_argument("train_classifier: empty dataset");
    Classifier model = Classifier::initialize(arch, derive_seed(hyper.seed, {0x1417}));
    ClassifierTrainer trainer(model, hyper);
    for (std::size_t e = 0; e < hyper.epochs; ++e) trainer.run_epoch(data);
    return model;
}

Classifier train_classifier(const Dataset& dataset, const TrainHyper& hyper) {
    return train_classifier(make_examples(dataset.train), default_architecture(dataset.spec), hyper);
}

}  // namespace ulab
