#include "nslab/action.hpp"

#include <cmath>
#include <stdexcept>

namespace nslab {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

// Composite Simpson over [a, b]; f sampled at quad_intervals+1 nodes.
double simpson(double a, double b, int n, const std::function<double(double)>& f) {
  if (n < 2) throw std::invalid_argument("simpson: need >= 2 intervals");
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

Envelope Envelope::sine(int k, double t0, double tf) {
  const double T = tf - t0;
  return {
      [=](double t) { return std::sin(k * kPi * (t - t0) / T); },
      [=](double t) { return k * kPi / T * std::cos(k * kPi * (t - t0) / T); },
      "sine" + std::to_string(k),
  };
}

Envelope Envelope::bump(double t0, double tf) {
  const double T = tf - t0;
  return {
      [=](double t) {
        const double s = (t - t0) / T;
        return 4.0 * s * (1.0 - s);
      },
      [=](double t) {
        const double s = (t - t0) / T;
        return 4.0 * (1.0 - 2.0 * s) / T;
      },
      "bump",
  };
}

PerturbationField::PerturbationField(SpectralField shape, Envelope env, double t0, double tf)
    : shape_(std::move(shape)), env_(std::move(env)) {
  if (std::abs(env_.value(t0)) > 1e-12 || std::abs(env_.value(tf)) > 1e-12) {
    throw std::invalid_argument("PerturbationField: envelope must vanish at t0 and tf");
  }
  if (shape_.divergence_rel() > 1e-8) {
    throw std::invalid_argument("PerturbationField: shape must be divergence-free");
  }
}

ActionValue action(const VelocityHistory& h, int quad_intervals) {
  ActionValue av;
  av.t0 = h.t0();
  av.tf = h.tf();
  av.quadrature_dt = (av.tf - av.t0) / quad_intervals;
  av.value = simpson(av.t0, av.tf, quad_intervals,
                     [&](double t) { return energy(h.sample(t)); });
  return av;
}

SpectralField variation_velocity(const VelocityHistory& h, const PerturbationField& p, double t) {
  const SpectralField u = h.sample(t);
  const SpectralField& shape = p.shape();
  const double nu = h.params().nu;
  // du = (dxbar.grad)u - d_t dxbar - (u.grad)dxbar - nu laplace dxbar.
  // This is the unique local form whose L2 pairing with u integrates by
  // parts to int <d_t u + (u.grad)u - nu laplace u, dxbar> for every
  // divergence-free dxbar vanishing at the endpoints (see
  // docs/variation.md); in particular it vanishes in the mean exactly
  // when u solves the equations of motion.
  const SpectralField transport =
      advection_term(shape, u) - advection_term(u, shape) - nu * shape.laplacian();
  return (-p.env_deriv(t)) * shape + p.env_value(t) * transport;
}

double gateaux_derivative(const VelocityHistory& h, const PerturbationField& p,
                          int quad_intervals) {
  return simpson(h.t0(), h.tf(), quad_intervals, [&](double t) {
    return inner_product(h.sample(t), variation_velocity(h, p, t));
  });
}

double residual_pairing(const VelocityHistory& h, const PerturbationField& p,
                        int quad_intervals) {
  // Shrink by the residual stencil; the envelope vanishes at the
  // endpoints, so the truncated mass is O(margin^2).
  const double m = h.snapshot_spacing();
  return simpson(h.t0() + m, h.tf() - m, quad_intervals, [&](double t) {
    return p.env_value(t) * inner_product(ns_residual(h, t), p.shape());
  });
}

StationarityReport stationarity_report(const VelocityHistory& h,
                                       const std::vector<PerturbationField>& family,
                                       double tol_rel, int quad_intervals) {
  if (family.size() < 5) {
    throw std::invalid_argument("stationarity_report: need >= 5 perturbations");
  }
  StationarityReport rep;
  rep.action_value = action(h, quad_intervals).value;
  rep.tol = tol_rel * rep.action_value;

  const double t0 = h.t0(), tf = h.tf();
  for (const PerturbationField& p : family) {
    StationarityEntry e;
    e.gateaux = gateaux_derivative(h, p, quad_intervals);
    e.pairing = residual_pairing(h, p, quad_intervals);
    e.abs_diff = std::abs(e.gateaux - e.pairing);
    // S[u + eps du] on the same quadrature nodes; the action is exactly
    // quadratic, so Richardson over {1e-3, 1e-4} removes the eps term.
    auto s_eps = [&](double eps) {
      return simpson(t0, tf, quad_intervals, [&](double t) {
        const SpectralField u = h.sample(t);
        const SpectralField du = variation_velocity(h, p, t);
        const SpectralField v = u + eps * du;
        return 0.5 * inner_product(v, v);
      });
    };
    const double s0 = rep.action_value;
    const double e1 = 1e-3, e2 = 1e-4;
    const double d1 = (s_eps(e1) - s0) / e1;
    const double d2 = (s_eps(e2) - s0) / e2;
    e.fd_estimate = (e1 * d2 - e2 * d1) / (e1 - e2);
    e.fd_rel_err = std::abs(e.fd_estimate - e.gateaux) /
                   std::max({std::abs(e.gateaux), 1e-6 * std::abs(s0), 1e-12});
    e.second_order = simpson(t0, tf, quad_intervals, [&](double t) {
      const SpectralField du = variation_velocity(h, p, t);
      return 0.5 * inner_product(du, du);
    });
    rep.max_abs_gateaux = std::max(rep.max_abs_gateaux, std::abs(e.gateaux));
    rep.entries.push_back(e);
  }
  rep.pass = rep.max_abs_gateaux <= rep.tol;
  return rep;
}

namespace {

// Divergence-free shape from a streamfunction sampled on the grid:
// u = d psi / dy, v = -d psi / dx, normalized to max|u| = 1.
SpectralField shape_from_stream(GridSpec grid, const std::function<double(double, double)>& psi) {
  const int n = grid.n;
  std::vector<double> vals(grid.size());
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      vals[static_cast<size_t>(iy) * n + ix] = psi(kTwoPi * ix / n, kTwoPi * iy / n);
    }
  }
  const SpectralField s = SpectralField::from_physical(grid, vals, vals);
  std::vector<std::complex<double>> ux(grid.size()), uy(grid.size());
  for (int iy = 0; iy < n; ++iy) {
    const double ky = grid.wavenumber(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double kx = grid.wavenumber(ix);
      const size_t i = static_cast<size_t>(iy) * n + ix;
      const std::complex<double> ph = s.data(0)[i];
      ux[i] = std::complex<double>(0.0, ky) * ph;
      uy[i] = std::complex<double>(0.0, -kx) * ph;
    }
  }
  SpectralField f(grid, std::move(ux), std::move(uy));
  const double m = f.max_abs();
  return m > 0.0 ? (1.0 / m) * f : f;
}

}  // namespace

std::vector<PerturbationField> standard_family(GridSpec grid, double t0, double tf) {
  std::vector<PerturbationField> fam;
  fam.emplace_back(taylor_green(0.0, 0.0, grid), Envelope::sine(1, t0, tf), t0, tf);
  fam.emplace_back(shape_from_stream(grid, [](double x, double) { return std::cos(x); }),
                   Envelope::sine(2, t0, tf), t0, tf);
  fam.emplace_back(shape_from_stream(grid, [](double, double y) { return std::sin(2 * y); }),
                   Envelope::bump(t0, tf), t0, tf);
  fam.emplace_back(shape_from_stream(
                       grid, [](double x, double y) { return std::sin(x) * std::cos(2 * y); }),
                   Envelope::sine(3, t0, tf), t0, tf);
  fam.emplace_back(shape_from_stream(
                       grid, [](double x, double y) { return std::cos(2 * x) * std::sin(y); }),
                   Envelope::bump(t0, tf), t0, tf);
  return fam;
}

}  // namespace nslab
