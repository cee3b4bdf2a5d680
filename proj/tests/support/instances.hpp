#pragma once

// Randomized hubs for oracle comparisons, plus fixture paths.

#include <cstdint>
#include <filesystem>
#include <string>

#include "ehub/dispatch.hpp"

namespace ehub::testing {

std::filesystem::path fixture(const std::string& relative);

struct Instance {
  HubTopology hub;
  SeriesData series;
  std::size_t periods = 0;
  std::string description;
};

/// One or two nonlinear components (polynomial SISO/SIMO, adjustable
/// quadratic or storage) next to linear backups, T <= 3, at most
/// `max_binaries` binaries in the dispatch model.
Instance random_small_instance(std::uint64_t seed, int max_binaries = 12);

/// Constant-efficiency converters and junctions only, T in 1..4.
Instance random_constant_instance(std::uint64_t seed);

}  // namespace ehub::testing
