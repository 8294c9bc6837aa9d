#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ulab/models/classifier.hpp"

namespace ulab {

/// Fraction of samples whose argmax prediction equals the label.
double accuracy(const Classifier& model, std::span<const GridSample> samples);

struct AccuracyTriple {
    double global = 0.0;  // full test set
    double train = 0.0;   // target class, train split
    double test = 0.0;    // target class, test split
    double retain = 0.0;  // non-target classes, test split
};

AccuracyTriple accuracy_triple(const Classifier& model, const Dataset& dataset, ClassId target);

/// Samples of `samples` with label == cls (keep = true) or != cls (keep = false).
std::vector<GridSample> filter_class(std::span<const GridSample> samples, ClassId cls, bool keep);

/// -ln p_model(label | x) per sample.
std::vector<double> per_sample_ce(const Classifier& model, std::span<const GridSample> samples);

enum class CeGroup { TargetTrain, RetainTrain, RetainTest };
std::string to_string(CeGroup group);

struct CeHistogram {
    CeGroup group = CeGroup::TargetTrain;
    std::vector<double> edges;         // bins + 1 edges over [0, cap]
    std::vector<std::size_t> counts;   // bins + 1 entries, the last one is overflow (> cap)
    std::vector<double> values;

    std::size_t total() const;
    double median() const;
    /// Counts divided by the total.
    std::vector<double> normalized() const;
};

CeHistogram make_histogram(CeGroup group, std::vector<double> values, std::size_t bins, double cap);
std::array<CeHistogram, 3> ce_histograms(const Classifier& model, const Dataset& dataset, ClassId target,
                                         std::size_t bins = 20, double cap = 5.0);
/// L1 distance between normalized histograms with identical binning.
double histogram_l1(const CeHistogram& a, const CeHistogram& b);

struct DeviationSummary {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::vector<double> per_sample;
};

/// Per-sample L1 distance between the posteriors of two models.
DeviationSummary deviation(const Classifier& a, const Classifier& b, std::span<const GridSample> samples);

}  // namespace ulab
