#pragma once

#include "cofed/core.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>

namespace cofed::csv {

// Layout: one optional header row ("x0,...,x{d-1}[,label]"), one instance per
// row, features as decimal floats, optional trailing integer "label" column.

/// Features are written with 17 significant digits so loading restores them exactly.
std::string format_double(double v);

void save(const LabeledDataset& data, const std::filesystem::path& path);
void save(const UnlabeledDataset& data, const std::filesystem::path& path);

/// Requires a trailing label column. With `space`, labels outside it are rejected.
LabeledDataset load_labeled(const std::filesystem::path& path,
                            const std::optional<LabelSpace>& space = std::nullopt);
/// Every column is a feature.
UnlabeledDataset load_unlabeled(const std::filesystem::path& path);

/// Labeled iff the header's last column is named "label".
std::variant<LabeledDataset, UnlabeledDataset> load(const std::filesystem::path& path);

}  // namespace cofed::csv
