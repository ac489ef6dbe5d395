#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tgemb/autodiff.hpp"

namespace tgemb {

// Central finite-difference comparison against the analytic gradients
// already stored on the parameters. `forward` re-evaluates the scalar
// objective from current parameter values.
double fd_max_rel_error(ad::ParameterSet& params, const std::function<double()>& forward,
                        double h = 1e-5);

struct GradCheckReport {
  std::string layer;
  double max_rel_error = 0.0;
};

// Checks every composite layer (GRU cell, time encoder, both attention
// components, layer combiner, prediction head) at `trials` random points and
// reports the worst relative error per layer.
std::vector<GradCheckReport> run_gradient_checks(uint64_t seed, int trials);

}  // namespace tgemb
