#pragma once

#include <stdexcept>
#include <vector>

#include "nslab/spectral_field.hpp"

namespace nslab {

struct NsParams {
  double nu = 0.0;   // kinematic viscosity, >= 0
  double dt = 1e-3;  // time step
  double t0 = 0.0;
  double tf = 1.0;
  int snap_stride = 1;  // keep every k-th step in the history

  void validate() const;
};

struct CflError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Time-ordered divergence-free snapshots on [t0, tf] with cubic Hermite
// temporal interpolation. Immutable once built.
class VelocityHistory {
 public:
  VelocityHistory(NsParams params, std::vector<std::pair<double, SpectralField>> snapshots);

  // Integrate the Navier-Stokes equation from `initial` over [t0, tf].
  static VelocityHistory solve(const SpectralField& initial, const NsParams& params);
  // Time-independent history holding `field` at every snapshot time
  // (a non-solution trial flow unless the field is a steady solution).
  static VelocityHistory frozen(const SpectralField& field, const NsParams& params);

  const NsParams& params() const { return params_; }
  double t0() const { return params_.t0; }
  double tf() const { return params_.tf; }
  double snapshot_spacing() const { return spacing_; }
  const std::vector<std::pair<double, SpectralField>>& snapshots() const { return snaps_; }

  // Cubic Hermite interpolation (Catmull-Rom slopes) per Fourier
  // coefficient; result re-projected divergence-free. Throws
  // std::out_of_range outside [t0, tf].
  SpectralField sample(double t) const;

  // Velocity history with u~(r, s) = -u(r, t0 + tf - s): solves the
  // negative-viscosity equation when this history solves Navier-Stokes.
  VelocityHistory time_reversed() const;

 private:
  NsParams params_;
  std::vector<std::pair<double, SpectralField>> snaps_;
  double spacing_ = 0.0;
};

// One explicit RK4 step of du/dt = -P[(u.grad)u] + nu laplace(u).
// Throws CflError when dt * max|u| * n / (2 pi) > 0.5.
SpectralField step(const SpectralField& f, const NsParams& params);

// Kinetic energy (1/2) int |u|^2, computed spectrally.
double energy(const SpectralField& f);
// Enstrophy (1/2) int omega^2 with omega = dv/dx - du/dy.
double enstrophy(const SpectralField& f);

// Leray-projected residual P[du/dt + (u.grad)u - nu laplace(u)] at time t,
// with du/dt by a centered difference over one snapshot spacing. Throws
// std::out_of_range if the stencil leaves [t0, tf].
SpectralField ns_residual(const VelocityHistory& h, double t);

}  // namespace nslab
