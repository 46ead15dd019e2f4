#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace lawn::radio {

using Vec3 = Eigen::Vector3d;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Uniform linear array placed vertically at the base station; the angle
// of departure is measured from the array axis, cos(theta) = dz/dist.
struct ArrayGeometry {
  int n_s = 12;                       // antenna count
  double spacing_over_lambda = 0.5;   // d / lambda
  Vec3 gbs_pos = Vec3::Zero();        // base station position [m]

  void validate() const;
};

// All powers linear watts; dB only at the config boundary.
struct ChannelConst {
  double rho0 = 1e-6;          // channel power gain at 1 m
  double noise_power = 1e-12;  // receiver noise [W]
  double bandwidth = 1.0;      // [Hz]; rates default to bits/s/Hz

  void validate() const;
};

// One slot's transmit side: per-formation beamformers plus the
// dedicated-signal covariance.
struct BeamformerSet {
  std::vector<CVec> w;  // one vector per formation, length n_s
  CMat c_d;             // n_s x n_s Hermitian PSD
};

// Steering vector toward a target; unit-modulus entries. Throws when
// the target coincides with the array.
CVec steering_vector(const Vec3& target_pos, const ArrayGeometry& geo);

// LoS channel h = sqrt(rho0 / dist^2) * a(target).
CVec channel(const Vec3& leader_pos, const ArrayGeometry& geo,
             const ChannelConst& cc);

// Received SINR of formation k's leader under the given beamformer set.
double sinr(int k, const std::vector<CVec>& channels, const BeamformerSet& bf,
            const ChannelConst& cc);

// Achievable rate W*log2(1+s).
double rate(double sinr_linear, const ChannelConst& cc);

// Transmit beampattern gain a^H (sum W_k + C_d) a toward a sample point.
double beampattern_gain(const Vec3& sample_pos, const BeamformerSet& bf,
                        const ArrayGeometry& geo);

}  // namespace lawn::radio
