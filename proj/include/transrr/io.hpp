#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "transrr/dataset.hpp"

namespace transrr {

/// 17 significant digits; round-trips doubles exactly, keeps CSVs byte-stable.
std::string format_double(double v);

/// Loads `y,x1,...,xp` (one header row). Rejects non-numeric cells with the
/// offending row/column in the message.
Dataset load_data_csv(const std::filesystem::path& path);

void save_data_csv(const std::filesystem::path& path, const Dataset& data);

/// Writes via a temp file in the same directory plus an atomic rename, so a
/// crashed run never leaves a partial file behind.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

}  // namespace transrr
