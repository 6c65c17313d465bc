#include "nslab/ns_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace nslab {

using cd = std::complex<double>;

void NsParams::validate() const {
  if (nu < 0.0) throw std::invalid_argument("NsParams: nu must be >= 0");
  if (dt <= 0.0) throw std::invalid_argument("NsParams: dt must be > 0");
  if (tf <= t0) throw std::invalid_argument("NsParams: tf must be > t0");
  if (dt > tf - t0) throw std::invalid_argument("NsParams: dt must be <= tf - t0");
  if (snap_stride < 1) throw std::invalid_argument("NsParams: snap_stride must be >= 1");
}

namespace {

void check_cfl(const SpectralField& f, const NsParams& p) {
  const double cfl = p.dt * f.max_abs() * f.grid().n / kTwoPi;
  if (cfl > 0.5) {
    char msg[96];
    std::snprintf(msg, sizeof(msg), "CFL violation: dt*max|u|*n/(2pi) = %.3g > 0.5", cfl);
    throw CflError(msg);
  }
}

SpectralField rhs(const SpectralField& f, double nu) {
  const SpectralField adv = advection_term(f, f);
  return (nu * f.laplacian() - adv).projected_divergence_free();
}

SpectralField rk4_step(const SpectralField& f, double dt, double nu) {
  const SpectralField k1 = rhs(f, nu);
  const SpectralField k2 = rhs(f + (dt / 2.0) * k1, nu);
  const SpectralField k3 = rhs(f + (dt / 2.0) * k2, nu);
  const SpectralField k4 = rhs(f + dt * k3, nu);
  return (f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).projected_divergence_free();
}

}  // namespace

SpectralField step(const SpectralField& f, const NsParams& params) {
  params.validate();
  check_cfl(f, params);
  return rk4_step(f, params.dt, params.nu);
}

VelocityHistory::VelocityHistory(NsParams params,
                                 std::vector<std::pair<double, SpectralField>> snapshots)
    : params_(params), snaps_(std::move(snapshots)) {
  params_.validate();
  if (snaps_.size() < 2) throw std::invalid_argument("VelocityHistory: need >= 2 snapshots");
  for (size_t i = 1; i < snaps_.size(); ++i) {
    if (snaps_[i].first <= snaps_[i - 1].first) {
      throw std::invalid_argument("VelocityHistory: snapshot times must increase");
    }
  }
  if (std::abs(snaps_.front().first - params_.t0) > 1e-12 ||
      std::abs(snaps_.back().first - params_.tf) > 1e-12) {
    throw std::invalid_argument("VelocityHistory: snapshots must span [t0, tf]");
  }
  spacing_ = 0.0;
  for (size_t i = 1; i < snaps_.size(); ++i) {
    spacing_ = std::max(spacing_, snaps_[i].first - snaps_[i - 1].first);
  }
}

VelocityHistory VelocityHistory::solve(const SpectralField& initial, const NsParams& params) {
  params.validate();
  std::vector<std::pair<double, SpectralField>> snaps;
  SpectralField f = initial.projected_divergence_free().with_time_tag(params.t0);
  double t = params.t0;
  snaps.emplace_back(t, f);
  const double span = params.tf - params.t0;
  const long n_steps = static_cast<long>(std::ceil(span / params.dt - 1e-9));
  for (long i = 0; i < n_steps; ++i) {
    const double h = std::min(params.dt, params.tf - t);
    NsParams sp = params;
    sp.dt = h;
    check_cfl(f, sp);
    f = rk4_step(f, h, params.nu);
    t = (i + 1 == n_steps) ? params.tf : params.t0 + (i + 1) * params.dt;
    f = f.with_time_tag(t);
    if ((i + 1) % params.snap_stride == 0 || i + 1 == n_steps) snaps.emplace_back(t, f);
  }
  return VelocityHistory(params, std::move(snaps));
}

VelocityHistory VelocityHistory::frozen(const SpectralField& field, const NsParams& params) {
  params.validate();
  const SpectralField f = field.projected_divergence_free();
  std::vector<std::pair<double, SpectralField>> snaps;
  const double span = params.tf - params.t0;
  const double sdt = params.dt * params.snap_stride;
  const long n = std::max(1L, static_cast<long>(std::ceil(span / sdt - 1e-9)));
  for (long i = 0; i <= n; ++i) {
    const double t = (i == n) ? params.tf : params.t0 + i * sdt;
    snaps.emplace_back(t, f.with_time_tag(t));
  }
  return VelocityHistory(params, std::move(snaps));
}

SpectralField VelocityHistory::sample(double t) const {
  if (t < params_.t0 - 1e-12 || t > params_.tf + 1e-12) {
    throw std::out_of_range("sample: t outside [t0, tf]");
  }
  t = std::clamp(t, params_.t0, params_.tf);
  // Locate the bracketing snapshot pair.
  const auto it = std::upper_bound(
      snaps_.begin(), snaps_.end(), t,
      [](double v, const std::pair<double, SpectralField>& s) { return v < s.first; });
  size_t i1 = std::min(snaps_.size() - 1, static_cast<size_t>(it - snaps_.begin()));
  size_t i0 = i1 == 0 ? 0 : i1 - 1;
  if (i1 == i0) i1 = i0 + 1;
  if (std::abs(t - snaps_[i0].first) < 1e-12) return snaps_[i0].second;
  if (std::abs(t - snaps_[i1].first) < 1e-12) return snaps_[i1].second;

  const double ta = snaps_[i0].first, tb = snaps_[i1].first;
  const double dt = tb - ta;
  const double s = (t - ta) / dt;
  // Hermite basis.
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);

  const GridSpec grid = snaps_[i0].second.grid();
  std::vector<cd> out[2];
  for (int c = 0; c < 2; ++c) {
    const auto& ya = snaps_[i0].second.data(c);
    const auto& yb = snaps_[i1].second.data(c);
    // Catmull-Rom slopes, one-sided at the interval ends of the history.
    const auto& ya_prev = snaps_[i0 > 0 ? i0 - 1 : i0].second.data(c);
    const auto& yb_next = snaps_[i1 + 1 < snaps_.size() ? i1 + 1 : i1].second.data(c);
    const double ta_prev = snaps_[i0 > 0 ? i0 - 1 : i0].first;
    const double tb_next = snaps_[i1 + 1 < snaps_.size() ? i1 + 1 : i1].first;
    const double da = (i0 > 0) ? (tb - ta_prev) : dt;
    const double db = (i1 + 1 < snaps_.size()) ? (tb_next - ta) : dt;
    out[c].resize(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
      const cd ma = (i0 > 0) ? (yb[i] - ya_prev[i]) / da : (yb[i] - ya[i]) / da;
      const cd mb = (i1 + 1 < snaps_.size()) ? (yb_next[i] - ya[i]) / db : (yb[i] - ya[i]) / db;
      out[c][i] = h00 * ya[i] + h01 * yb[i] + dt * (h10 * ma + h11 * mb);
    }
  }
  return SpectralField(grid, std::move(out[0]), std::move(out[1]), t)
      .projected_divergence_free();
}

VelocityHistory VelocityHistory::time_reversed() const {
  std::vector<std::pair<double, SpectralField>> snaps;
  snaps.reserve(snaps_.size());
  for (auto it = snaps_.rbegin(); it != snaps_.rend(); ++it) {
    const double s = params_.t0 + params_.tf - it->first;
    snaps.emplace_back(s, (-1.0 * it->second).with_time_tag(s));
  }
  return VelocityHistory(params_, std::move(snaps));
}

double energy(const SpectralField& f) { return 0.5 * inner_product(f, f); }

double enstrophy(const SpectralField& f) {
  double s = 0.0;
  for (const ActiveMode& m : f.active_modes()) {
    const cd omega = cd(0.0, m.kx) * m.uy - cd(0.0, m.ky) * m.ux;
    s += std::norm(omega);
  }
  return 0.5 * kTwoPi * kTwoPi * s;
}

SpectralField ns_residual(const VelocityHistory& h, double t) {
  const double d = h.snapshot_spacing();
  if (t - d < h.t0() - 1e-12 || t + d > h.tf() + 1e-12) {
    throw std::out_of_range("ns_residual: centered stencil leaves [t0, tf]");
  }
  const SpectralField u = h.sample(t);
  const SpectralField ut = (1.0 / (2.0 * d)) * (h.sample(t + d) - h.sample(t - d));
  const SpectralField res = ut + advection_term(u, u) - h.params().nu * u.laplacian();
  return res.projected_divergence_free();
}

}  // namespace nslab
