#pragma once

#include <cstdint>
#include <vector>

#include "tgemb/autodiff.hpp"

namespace tgemb::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a ParameterSet. Moment buffers are keyed by
// parameter order, so the set must not change between steps.
class Adam {
 public:
  Adam(ParameterSet& params, AdamConfig cfg);

  // Applies one update from the gradients currently stored on the
  // parameters, then increments the step counter. Does not zero gradients.
  void step();

  int64_t steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  ParameterSet& params_;
  AdamConfig cfg_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  int64_t step_ = 0;
};

}  // namespace tgemb::ad
