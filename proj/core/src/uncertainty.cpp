#include "dadagger/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dadagger/error.hpp"
#include "dadagger/random.hpp"

namespace dadagger {

namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha out of range: " + std::to_string(alpha) +
                      " (expected 0 <= alpha <= 1)");
  }
}

}  // namespace

double disagreement(std::span<const Action> samples) {
  if (samples.empty()) throw InputError("disagreement needs at least one sample");
  const std::size_t dim = samples.front().size();
  for (const Action& a : samples) {
    if (a.size() != dim) throw InputError("action samples have mixed dimensions");
  }
  const double m = static_cast<double>(samples.size());
  double total = 0.0;
  // Deviations are taken around the first sample so identical samples give
  // exactly zero.
  for (std::size_t d = 0; d < dim; ++d) {
    const double ref = samples.front()[d];
    double shift = 0.0;
    for (const Action& a : samples) shift += a[d] - ref;
    shift /= m;
    double var = 0.0;
    for (const Action& a : samples) {
      const double e = (a[d] - ref) - shift;
      var += e * e;
    }
    total += var / m;
  }
  return total;
}

std::size_t query_budget(std::size_t n, double alpha) {
  check_alpha(alpha);
  const double x = alpha * static_cast<double>(n);
  // alpha is usually a short decimal (0.1, 0.2, ...) whose binary product with
  // n can land a hair above an integer; treat that as the integer itself.
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-12 * x) {
    return static_cast<std::size_t>(r);
  }
  return std::min(n, static_cast<std::size_t>(std::ceil(x)));
}

std::vector<std::size_t> select_top_alpha(std::span<const double> scores,
                                          double alpha) {
  const std::size_t k = query_budget(scores.size(), alpha);
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                    idx.end(), [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> select_random(std::size_t count_total, double alpha,
                                       std::uint64_t rng_seed) {
  const std::size_t k = query_budget(count_total, alpha);
  std::vector<std::size_t> idx(count_total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(rng_seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(count_total - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace dadagger
