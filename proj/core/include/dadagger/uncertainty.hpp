#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dadagger/types.hpp"

namespace dadagger {

/// Committee disagreement: the trace of the population covariance of the
/// samples, i.e. the per-dimension variance (divided by M) summed over action
/// dimensions. A single sample has disagreement 0.
double disagreement(std::span<const Action> samples);

/// Indices of the ceil(alpha * n) largest scores, ties going to the lower
/// index, returned in ascending order.
std::vector<std::size_t> select_top_alpha(std::span<const double> scores,
                                          double alpha);

/// ceil(alpha * count_total) distinct indices drawn uniformly without
/// replacement, ascending.
std::vector<std::size_t> select_random(std::size_t count_total, double alpha,
                                       std::uint64_t rng_seed);

/// Number of states kept for a pool of n at fraction alpha.
std::size_t query_budget(std::size_t n, double alpha);

}  // namespace dadagger
