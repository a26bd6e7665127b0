#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dadagger/types.hpp"

namespace dadagger {

/// Ordered multiset of (observation, expert action) pairs for one environment
/// kind. Duplicates are kept.
struct Dataset {
  std::string env_kind;
  std::vector<Sample> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }

  bool operator==(const Dataset&) const = default;
};

/// D followed by D_i. Throws InputError when the environment kinds differ.
Dataset aggregate(const Dataset& d, const Dataset& d_i);

struct HistogramReport {
  std::vector<double> bin_edges;                 // bins + 1 edges over [-1, 1]
  std::vector<std::vector<std::size_t>> counts;  // [action dim][bin]
  std::size_t total = 0;
  std::vector<double> entropy_bits;              // per action dim
};

/// Uniform bins over [-1, 1] per action dimension. The value 1 falls in the
/// last bin; values outside the range are counted in the edge bins.
HistogramReport histogram(const Dataset& d, std::size_t bins = 20);

/// Columns dim,bin_lo,bin_hi,count.
std::string histogram_csv(const HistogramReport& h);

/// JSON lines, one {"obs": [...], "act": [...]} object per pair.
void save_dataset(const Dataset& d, const std::filesystem::path& path);

/// Inverse of save_dataset. When `env_kind` names a built-in environment the
/// dimensions are checked against it, otherwise against the first line.
/// Throws ParseError carrying the 1-based line number.
Dataset load_dataset(const std::filesystem::path& path,
                     const std::string& env_kind = {});

}  // namespace dadagger
