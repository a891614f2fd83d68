#pragma once

/**
 * @file csv.hpp
 * @brief CSV emission for sweep results: header with units, LF line endings,
 *        '.' decimal separator, provenance (config hash, seed) on every row.
 */

#include <filesystem>
#include <ostream>
#include <span>
#include <string>

#include "isac/experiments.hpp"
#include "isac/rd_estimation.hpp"

namespace isac {

/// Locale-independent shortest round-trip text for a double; nan/inf spelled out.
std::string format_number(double value);

void write_csv(std::ostream& out, const SweepResult& result);
std::string to_csv(const SweepResult& result);
void write_csv_file(const std::filesystem::path& path, const SweepResult& result);

/// Grid dump: header row of Doppler values, then one row per delay bin.
void write_rdmap_csv(const std::filesystem::path& path, const RangeDopplerMap& map);

}  // namespace isac
