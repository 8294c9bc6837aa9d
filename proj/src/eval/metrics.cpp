#include "ulab/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ulab {

double accuracy(const Classifier& model, std::span<const GridSample> samples) {
    if (samples.empty()) throw std::invalid_argument("accuracy: empty population");
    const Examples ex = make_examples(samples);
    const auto pred = model.predict(ex.features);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == ex.labels[i];
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

std::vector<GridSample> filter_class(std::span<const GridSample> samples, ClassId cls, bool keep) {
    std::vector<GridSample> out;
    for (const auto& s : samples) {
        if ((s.label == cls) == keep) out.push_back(s);
    }
    return out;
}

AccuracyTriple accuracy_triple(const Classifier& model, const Dataset& dataset, ClassId target) {
    if (target >= dataset.num_classes()) throw std::invalid_argument("accuracy_triple: target class out of range");
    AccuracyTriple t;
    t.global = accuracy(model, dataset.test);
    t.train = accuracy(model, filter_class(dataset.train, target, true));
    t.test = accuracy(model, filter_class(dataset.test, target, true));
    t.retain = accuracy(model, filter_class(dataset.test, target, false));
    return t;
}

std::vector<double> per_sample_ce(const Classifier& model, std::span<const GridSample> samples) {
    if (samples.empty()) return {};
    const Examples ex = make_examples(samples);
    const Tensor z = model.logits(ex.features);
    std::vector<double> out(ex.size());
    for (std::size_t r = 0; r < ex.size(); ++r) out[r] = cross_entropy(z.row(r), ex.labels[r]);
    return out;
}

std::string to_string(CeGroup group) {
    switch (group) {
        case CeGroup::TargetTrain: return "target-train";
        case CeGroup::RetainTrain: return "retain-train";
        case CeGroup::RetainTest: return "retain-test";
    }
    return "?";
}

std::size_t CeHistogram::total() const {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
}

double CeHistogram::median() const {
    if (values.empty()) throw std::invalid_argument("histogram median: no values");
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> CeHistogram::normalized() const {
    const double n = static_cast<double>(total());
    std::vector<double> out(counts.size(), 0.0);
    if (n == 0.0) return out;
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) / n;
    return out;
}

CeHistogram make_histogram(CeGroup group, std::vector<double> values, std::size_t bins, double cap) {
    if (bins < 10) throw std::invalid_argument("ce histogram: need at least 10 bins");
    if (!(cap > 0.0)) throw std::invalid_argument("ce histogram: cap must be positive");
    CeHistogram h;
    h.group = group;
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = cap * static_cast<double>(i) / static_cast<double>(bins);
    h.counts.assign(bins + 1, 0);
    for (double v : values) {
        if (v < 0.0 || !std::isfinite(v)) throw std::invalid_argument("ce histogram: values must be finite and >= 0");
        if (v > cap) {
            ++h.counts[bins];
            continue;
        }
        auto b = static_cast<std::size_t>(v / cap * static_cast<double>(bins));
        ++h.counts[std::min(b, bins - 1)];
    }
    h.values = std::move(values);
    return h;
}

std::array<CeHistogram, 3> ce_histograms(const Classifier& model, const Dataset& dataset, ClassId target,
                                         std::size_t bins, double cap) {
    return {
        make_histogram(CeGroup::TargetTrain, per_sample_ce(model, filter_class(dataset.train, target, true)), bins, cap),
        make_histogram(CeGroup::RetainTrain, per_sample_ce(model, filter_class(dataset.train, target, false)), bins,
                       cap),
        make_histogram(CeGroup::RetainTest, per_sample_ce(model, filter_class(dataset.test, target, false)), bins, cap),
    };
}

double histogram_l1(const CeHistogram& a, const CeHistogram& b) {
    if (a.edges != b.edges) throw std::invalid_argument("histogram_l1: binning differs");
    const auto pa = a.normalized();
    const auto pb = b.normalized();
    double d = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) d += std::abs(pa[i] - pb[i]);
    return d;
}

DeviationSummary deviation(const Classifier& a, const Classifier& b, std::span<const GridSample> samples) {
    if (a.architecture().num_classes != b.architecture().num_classes) {
        throw std::invalid_argument("deviation: models have different output spaces");
    }
    DeviationSummary out;
    if (samples.empty()) return out;
    const Examples ex = make_examples(samples);
    const Tensor pa = a.predict_proba(ex.features);
    const Tensor pb = b.predict_proba(ex.features);
    out.per_sample.resize(ex.size());
    double sum = 0.0;
    for (std::size_t r = 0; r < ex.size(); ++r) {
        double d = 0.0;
        const auto ra = pa.row(r);
        const auto rb = pb.row(r);
        for (std::size_t c = 0; c < ra.size(); ++c) d += std::abs(ra[c] - rb[c]);
        out.per_sample[r] = d;
        sum += d;
    }
    out.mean = sum / static_cast<double>(ex.size());
    out.min = *std::min_element(out.per_sample.begin(), out.per_sample.end());
    out.max = *std::max_element(out.per_sample.begin(), out.per_sample.end());
    return out;
}

}  // namespace ulab
