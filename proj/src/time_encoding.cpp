#include "tgemb/time_encoding.hpp"

#include <cmath>
#include <vector>

namespace tgemb {

TimeEncoderParams::TimeEncoderParams(int d_time)
    : omegas("time/omegas", ad::Matrix(1, d_time)) {
  if (d_time < 1) throw UsageError("time encoder needs at least one frequency");
  // Geometric spread over four decades, from period ~2*pi seconds up to
  // multi-day scales; the trainer fine-tunes from there.
  for (int i = 0; i < d_time; ++i)
    omegas.value(0, i) = std::pow(10.0, -4.0 * static_cast<double>(i) / d_time);
}

ad::Tensor encode_times(const TimeEncoderParams& params, const ad::ParamView& view,
                        std::span<const double> dts) {
  const int d = params.d_time();
  const ad::Tensor& w = view[params.omegas];
  const double scale = std::sqrt(1.0 / static_cast<double>(d));

  ad::Matrix value(static_cast<Eigen::Index>(dts.size()), 2 * d);
  for (std::size_t r = 0; r < dts.size(); ++r) {
    if (dts[r] < 0.0)
      throw NumericError("negative time gap " + std::to_string(dts[r]) +
                         " passed to the time encoder");
    for (int i = 0; i < d; ++i) {
      const double a = w.value()(0, i) * dts[r];
      value(static_cast<Eigen::Index>(r), 2 * i) = scale * std::cos(a);
      value(static_cast<Eigen::Index>(r), 2 * i + 1) = scale * std::sin(a);
    }
  }

  // d/dw_i [s cos(w_i dt)] = -dt * (s sin(w_i dt)); d/dw_i [s sin(w_i dt)] =
  // dt * (s cos(w_i dt)); both factors already sit in the value matrix.
  std::vector<double> gaps(dts.begin(), dts.end());
  ad::Matrix saved = value;
  return ad::custom_unary(w, std::move(value),
                          [gaps = std::move(gaps), saved = std::move(saved),
                           d](const ad::Matrix& g) {
                            ad::Matrix gw = ad::Matrix::Zero(1, d);
                            for (Eigen::Index r = 0; r < g.rows(); ++r)
                              for (int i = 0; i < d; ++i)
                                gw(0, i) += gaps[static_cast<std::size_t>(r)] *
                                            (-g(r, 2 * i) * saved(r, 2 * i + 1) +
                                             g(r, 2 * i + 1) * saved(r, 2 * i));
                            return gw;
                          });
}

}  // namespace tgemb
