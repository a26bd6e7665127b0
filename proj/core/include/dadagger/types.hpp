#pragma once

#include <vector>

namespace dadagger {

using Observation = std::vector<double>;
using Action = std::vector<double>;

/// One supervised pair: a visited state and the expert's label for it.
struct Sample {
  Observation obs;
  Action act;

  bool operator==(const Sample&) const = default;
};

}  // namespace dadagger
