#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nslab/ns_solver.hpp"
#include "nslab/spectral_field.hpp"

namespace nslab {

// Scalar time envelope with analytic derivative; must vanish at both
// interval endpoints (enforced by PerturbationField).
struct Envelope {
  std::function<double(double)> value;
  std::function<double(double)> deriv;
  std::string name;

  // sin(k pi s) with s = (t - t0) / (tf - t0).
  static Envelope sine(int k, double t0, double tf);
  // 4 s (1 - s).
  static Envelope bump(double t0, double tf);
};

// Separable admissible flow variation dxbar(r, t) = envelope(t) shape(r)
// with divergence-free shape and envelope(t0) = envelope(tf) = 0.
class PerturbationField {
 public:
  PerturbationField(SpectralField shape, Envelope env, double t0, double tf);

  const SpectralField& shape() const { return shape_; }
  const Envelope& envelope() const { return env_; }
  double env_value(double t) const { return env_.value(t); }
  double env_deriv(double t) const { return env_.deriv(t); }

 private:
  SpectralField shape_;
  Envelope env_;
};

struct ActionValue {
  double value = 0.0;
  double t0 = 0.0;
  double tf = 0.0;
  double quadrature_dt = 0.0;
};

// S = int_{t0}^{tf} (1/2) int |u|^2 dr dt by composite Simpson quadrature.
ActionValue action(const VelocityHistory& h, int quad_intervals = 200);

// Velocity variation induced by the flow variation dxbar:
// du = (dxbar.grad) u - d_t dxbar - (u.grad) dxbar - nu laplace dxbar,
// the Eulerian reduction fixed by the requirement that int dt <u, du>
// equal the residual pairing below (derivation in docs/variation.md).
// Not divergence-free in general (only dxbar is constrained).
SpectralField variation_velocity(const VelocityHistory& h, const PerturbationField& p, double t);

// Directional derivative of the action: int dt <u, du>_{L2}.
double gateaux_derivative(const VelocityHistory& h, const PerturbationField& p,
                          int quad_intervals = 200);

// Equivalent pairing int dt <P[du/dt + (u.grad)u - nu laplace u], dxbar>;
// agrees with gateaux_derivative and vanishes at Navier-Stokes solutions.
double residual_pairing(const VelocityHistory& h, const PerturbationField& p,
                        int quad_intervals = 200);

struct StationarityEntry {
  double gateaux = 0.0;
  double pairing = 0.0;
  double abs_diff = 0.0;
  double fd_estimate = 0.0;   // Richardson-extrapolated finite difference
  double fd_rel_err = 0.0;    // |fd - gateaux| / max(|gateaux|, 1e-6 S, 1e-12)
  double second_order = 0.0;  // (1/2) int dt ||du||^2 (informational)
};

struct StationarityReport {
  std::vector<StationarityEntry> entries;
  double action_value = 0.0;
  double tol = 0.0;  // stationarity threshold on |gateaux|
  double max_abs_gateaux = 0.0;
  bool pass = false;
};

// Evaluates every perturbation: analytic Gateaux derivative, residual
// pairing, and a finite-difference check of (S[u + eps du] - S[u]) / eps
// with Richardson extrapolation over eps in {1e-3, 1e-4}. PASS iff
// max |gateaux| <= tol_rel * S.
StationarityReport stationarity_report(const VelocityHistory& h,
                                       const std::vector<PerturbationField>& family,
                                       double tol_rel = 1e-3, int quad_intervals = 200);

// Five perturbations over distinct low-mode divergence-free shapes and
// envelopes; member 0 pairs the Taylor-Green shape with sin(pi s).
std::vector<PerturbationField> standard_family(GridSpec grid, double t0, double tf);

}  // namespace nslab
