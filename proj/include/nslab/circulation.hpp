#pragma once

#include <utility>
#include <vector>

#include "nslab/ns_solver.hpp"
#include "nslab/spectral_field.hpp"
#include "nslab/stochastic_flow.hpp"

namespace nslab {

// Closed oriented polyline of marker points (the segment from the last
// marker back to the first is implicit). Markers are coordinates at
// anchor_time and may be unwrapped (loops can wind the torus).
class LoopState {
 public:
  static LoopState square(Vec2 lo, Vec2 hi, double h_max, double anchor_time);
  static LoopState circle(Vec2 center, double radius, double h_max, double anchor_time);
  // Closed polyline through the given vertices; must be simple.
  static LoopState polyline(std::vector<Vec2> vertices, double h_max, double anchor_time);
  // Wrap advected markers without re-running the construction checks
  // (the loop is not guaranteed simple after advection).
  static LoopState from_advected(std::vector<Vec2> markers, double h_max, double anchor_time);

  const std::vector<Vec2>& markers() const { return markers_; }
  double h_max() const { return h_max_; }
  double anchor_time() const { return anchor_time_; }
  // Max adjacent spacing, closing segment included.
  double max_spacing() const;

  LoopState reversed() const;

 private:
  LoopState(std::vector<Vec2> markers, double h_max, double anchor_time);
  std::vector<Vec2> markers_;
  double h_max_ = 0.0;
  double anchor_time_ = 0.0;
};

// Midpoint-rule line integral of u along the closed polyline:
// sum_i u((p_i + p_{i+1})/2) . (p_{i+1} - p_i); O(h^2) under refinement.
double circulation(const SpectralField& f, const LoopState& loop);
double circulation(const SpectralField& f, std::span<const Vec2> markers);

// Monte Carlo summary of a circulation functional against a
// deterministic target.
struct CirculationEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample sd / sqrt(n)
  double target = 0.0;
  double z_score = 0.0;
  int n_samples = 0;

  // 3 sigma Monte Carlo band plus 1% discretization budget.
  bool passes() const;
};

// Advect a loop under one sample's Brownian path. Whenever advected
// spacing exceeds h_max, midpoint markers are inserted on the ORIGINAL
// loop and the advection is replayed under the same noise, up to a
// 10^5-marker cap (throws if exceeded).
LoopState advect_loop(const VelocityHistory& h, const LoopState& loop, double t_to, int sample,
                      const EnsembleSpec& ens, FlowDirection dir);

// Stochastic Kelvin check: compares circulation(u(.,t'), C) at the loop's
// anchor time t' against the sample mean of circulation(u(.,t), C_advected)
// over loops advected backward from t' to t < t'. The means agree (within
// Monte Carlo error) exactly when h solves Navier-Stokes.
CirculationEstimate kelvin_martingale_check(const VelocityHistory& h, const LoopState& loop,
                                            double t, const EnsembleSpec& ens);

// Per-sample circulations behind the Kelvin check (also used by the CLI
// to emit the sample CSV).
std::vector<double> kelvin_sample_circulations(const VelocityHistory& h, const LoopState& loop,
                                               double t, const EnsembleSpec& ens);

// Weber velocity w = (grad_a x)^T u(x(a,t), t) at the loop markers, with
// the label-space Jacobian by central differences of the flow map under
// replayed noise (eps = 1e-4).
std::vector<Vec2> weber_velocity(const VelocityHistory& h, const LoopState& loop, double t,
                                 int sample, const EnsembleSpec& ens);

// Pathwise identity: loop integral of the Weber velocity over the
// original loop (lhs) vs circulation of u over the advected loop (rhs).
std::pair<double, double> weber_circulation_identity(const VelocityHistory& h,
                                                     const LoopState& loop, double t, int sample,
                                                     const EnsembleSpec& ens);

// The identity for every sample of the ensemble in one batched advection.
std::vector<std::pair<double, double>> weber_identity_samples(const VelocityHistory& h,
                                                              const LoopState& loop, double t,
                                                              const EnsembleSpec& ens);

// Forward-martingale check for the time-reversed field
// u~(r, s) = -u(r, t0 + tf - s) (a negative-viscosity solution when h
// solves Navier-Stokes). Times t', t are in the reversed clock; the loop
// is anchored at t' and advected forward to t > t'.
CirculationEstimate anti_kelvin_check(const VelocityHistory& h, const LoopState& loop, double t,
                                      const EnsembleSpec& ens);
std::vector<double> anti_kelvin_sample_circulations(const VelocityHistory& h,
                                                    const LoopState& loop, double t,
                                                    const EnsembleSpec& ens);

}  // namespace nslab
