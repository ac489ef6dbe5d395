#pragma once

#include <span>

#include "tgemb/autodiff.hpp"

namespace tgemb {

// Learnable sinusoidal map from a non-negative time gap to a unit-norm
// vector: phi(dt) = sqrt(1/d) * [cos(w_1 dt), sin(w_1 dt), ..., cos(w_d dt),
// sin(w_d dt)].
struct TimeEncoderParams {
  ad::Parameter omegas;  // 1 x d_time

  explicit TimeEncoderParams(int d_time);

  int d_time() const { return static_cast<int>(omegas.value.cols()); }
  int output_dim() const { return 2 * d_time(); }

  void register_into(ad::ParameterSet& set) { set.add(omegas); }
};

// One encoded row per gap; differentiable w.r.t. the frequencies through the
// supplied view. Negative gaps are a caller bug.
ad::Tensor encode_times(const TimeEncoderParams& params, const ad::ParamView& view,
                        std::span<const double> dts);

inline ad::Tensor encode_time(const TimeEncoderParams& params, const ad::ParamView& view,
                              double dt) {
  return encode_times(params, view, std::span<const double>(&dt, 1));
}

}  // namespace tgemb
