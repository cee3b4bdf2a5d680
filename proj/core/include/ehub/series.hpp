#pragma once

// Time series for hub input prices and output demands.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ehub/hub_model.hpp"

namespace ehub {

/// Reads one numeric column from a comma-separated file with a header row.
/// Without a column name the file must hold a single data column, optionally
/// preceded by a period/hour/t/time index column.
std::vector<double> read_csv_column(const std::filesystem::path& file, const std::optional<std::string>& column);

/// Per-period prices (currency/MWh) and demands (kW), in hub declaration order.
struct SeriesData {
  std::vector<std::vector<double>> prices;   // [input][period]
  std::vector<std::vector<double>> demands;  // [output][period]

  std::size_t periods() const;
};

/// Resolves every price and demand reference of `hub`. A reference names an
/// entry of hub.series or is itself "file.csv" / "file.csv#column". Relative
/// files resolve against `series_dir` when given, else the hub's directory.
/// The result is truncated to `horizon` periods when set.
SeriesData load_series(const HubTopology& hub, const std::optional<std::filesystem::path>& series_dir = std::nullopt,
                       std::optional<std::size_t> horizon = std::nullopt);

}  // namespace ehub
