#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "ulab/data/dataset.hpp"
#include "ulab/poison/image_poison.hpp"

namespace ulab {

/// Malformed, truncated or mismatched artifact contents.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CGRD1 container: magic, a kind byte, the dataset spec, then tagged
/// sections of samples. The concept library and class signatures are not
/// stored; they are regenerated from the spec on load.
std::string encode_dataset(const Dataset& dataset);
Dataset decode_dataset(const std::string& bytes);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Poisoned datasets add the poison plan and a provenance section that
/// records every overwritten slot.
struct PoisonedFile {
    DatasetSpec spec;  // spec of the source dataset
    PoisonedDataset poisoned;
};

std::string encode_poisoned(const PoisonedDataset& poisoned, const DatasetSpec& source);
PoisonedFile decode_poisoned(const std::string& bytes);
void save_poisoned(const PoisonedDataset& poisoned, const DatasetSpec& source, const std::filesystem::path& path);
PoisonedFile load_poisoned(const std::filesystem::path& path);

}  // namespace ulab
