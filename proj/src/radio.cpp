#include "lawn/radio.hpp"

#include <cmath>
#include <stdexcept>

namespace lawn::radio {

void ArrayGeometry::validate() const {
  if (n_s < 1) throw std::invalid_argument("radio: n_s must be >= 1");
  if (!(spacing_over_lambda > 0.0))
    throw std::invalid_argument("radio: spacing_over_lambda must be > 0");
}

void ChannelConst::validate() const {
  if (!(rho0 > 0.0) || !(noise_power > 0.0) || !(bandwidth > 0.0))
    throw std::invalid_argument("radio: channel constants must be > 0");
}

CVec steering_vector(const Vec3& target_pos, const ArrayGeometry& geo) {
  const Vec3 r = target_pos - geo.gbs_pos;
  const double dist = r.norm();
  if (dist <= 0.0)
    throw std::domain_error("steering_vector: target coincides with the array");
  const double cos_aod = r.z() / dist;
  const double phase = 2.0 * 3.14159265358979323846 *
                       geo.spacing_over_lambda * cos_aod;
  CVec a(geo.n_s);
  for (int i = 0; i < geo.n_s; ++i)
    a(i) = std::polar(1.0, phase * static_cast<double>(i));
  return a;
}

CVec channel(const Vec3& leader_pos, const ArrayGeometry& geo,
             const ChannelConst& cc) {
  const double dist = (leader_pos - geo.gbs_pos).norm();
  if (dist <= 0.0)
    throw std::domain_error("channel: zero distance to the array");
  return std::sqrt(cc.rho0 / (dist * dist)) * steering_vector(leader_pos, geo);
}

double sinr(int k, const std::vector<CVec>& channels, const BeamformerSet& bf,
            const ChannelConst& cc) {
  const CVec& h = channels.at(static_cast<std::size_t>(k));
  const double signal = std::norm(h.dot(bf.w.at(static_cast<std::size_t>(k))));
  double interference = cc.noise_power;
  for (int i = 0; i < static_cast<int>(bf.w.size()); ++i) {
    if (i == k) continue;
    interference += std::norm(h.dot(bf.w[static_cast<std::size_t>(i)]));
  }
  if (bf.c_d.size() > 0)
    interference += (h.adjoint() * bf.c_d * h).real()(0, 0);
  return signal / interference;
}

double rate(double sinr_linear, const ChannelConst& cc) {
  return cc.bandwidth * std::log2(1.0 + sinr_linear);
}

double beampattern_gain(const Vec3& sample_pos, const BeamformerSet& bf,
                        const ArrayGeometry& geo) {
  const CVec a = steering_vector(sample_pos, geo);
  double gain = 0.0;
  for (const auto& w : bf.w) gain += std::norm(a.dot(w));
  if (bf.c_d.size() > 0) gain += (a.adjoint() * bf.c_d * a).real()(0, 0);
  return gain;
}

}  // namespace lawn::radio
