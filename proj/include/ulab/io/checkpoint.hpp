#pragma once

#include <filesystem>

#include "ulab/models/classifier.hpp"
#include "ulab/models/pcbm.hpp"
#include "ulab/models/window_lm.hpp"

namespace ulab {

/// A checkpoint is a JSON manifest (architecture, seeds, history, parameter
/// names and shapes, blob hash) next to a raw little-endian f64 blob with the
/// same stem and a ".bin" extension. Loading is bit-exact and verifies the
/// blob hash; any mismatch raises FormatError.
void save_classifier(const Classifier& model, const std::filesystem::path& manifest);
Classifier load_classifier(const std::filesystem::path& manifest);

void save_window_lm(const WindowLm& lm, const std::filesystem::path& manifest);
WindowLm load_window_lm(const std::filesystem::path& manifest);

void save_pcbm(const PcbmHead& pcbm, const PcbmHyper& hyper, const std::filesystem::path& manifest);
PcbmHead load_pcbm(const std::filesystem::path& manifest);

/// Path of the parameter blob that belongs to `manifest`.
std::filesystem::path blob_path(const std::filesystem::path& manifest);

}  // namespace ulab
