#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nslab/ns_solver.hpp"
#include "nslab/spectral_field.hpp"
#include "nslab/stochastic_flow.hpp"

using namespace nslab;

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

SpectralField constant_field(GridSpec grid, double cx, double cy) {
  std::vector<double> u(grid.size(), cx), v(grid.size(), cy);
  return SpectralField::from_physical(grid, u, v);
}

VelocityHistory frozen_history(const SpectralField& f, double nu, double tf) {
  NsParams p;
  p.nu = nu;
  p.dt = 1e-3;
  p.tf = tf;
  p.snap_stride = 100;
  return VelocityHistory::frozen(f, p);
}

// Minimal distance on the torus per coordinate (positions are wrapped on
// output, expectations may not be).
double torus_dist(Vec2 a, Vec2 b) {
  auto d1 = [](double x, double y) {
    double d = std::fmod(std::abs(x - y), kTwoPi);
    return std::min(d, kTwoPi - d);
  };
  return std::max(d1(a.x, b.x), d1(a.y, b.y));
}

}  // namespace

TEST_CASE("brownian_increment is a deterministic standard normal stream") {
  SUBCASE("same triple gives identical output") {
    const Vec2 a = brownian_increment(123, 45, 678);
    const Vec2 b = brownian_increment(123, 45, 678);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    const Vec2 c = brownian_increment(123, 45, 679);
    CHECK((c.x != a.x || c.y != a.y));
  }

  SUBCASE("moments over 1e6 draws") {
    const int n = 1000000;
    double sx = 0, sy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
      const Vec2 v = brownian_increment(99, 0, static_cast<std::uint64_t>(i));
      sx += v.x;
      sy += v.y;
      sxx += v.x * v.x;
      syy += v.y * v.y;
    }
    const double mx = sx / n, my = sy / n;
    CHECK(std::abs(mx) <= 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(my) <= 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(sxx / n - mx * mx == doctest::Approx(1.0).epsilon(0.01));
    CHECK(syy / n - my * my == doctest::Approx(1.0).epsilon(0.01));
  }

  SUBCASE("distinct samples give uncorrelated streams") {
    const int n = 100000;
    double s01 = 0, s0 = 0, s1 = 0, s00 = 0, s11 = 0;
    for (int i = 0; i < n; ++i) {
      const double a = brownian_increment(7, 0, static_cast<std::uint64_t>(i)).x;
      const double b = brownian_increment(7, 1, static_cast<std::uint64_t>(i)).x;
      s01 += a * b;
      s0 += a;
      s1 += b;
      s00 += a * a;
      s11 += b * b;
    }
    const double cov = s01 / n - (s0 / n) * (s1 / n);
    const double corr = cov / std::sqrt((s00 / n - s0 / n * (s0 / n)) *
                                        (s11 / n - s1 / n * (s1 / n)));
    CHECK(std::abs(corr) <= 0.02);
  }
}

TEST_CASE("ensemble spec validation") {
  EnsembleSpec ens;
  ens.n_samples = 0;
  CHECK_THROWS_AS(ens.validate(), std::invalid_argument);
  ens.n_samples = 4;
  ens.sde_dt = 0.0;
  CHECK_THROWS_AS(ens.validate(), std::invalid_argument);
}

TEST_CASE("deterministic characteristics at nu = 0") {
  const GridSpec grid(16);
  const VelocityHistory h = frozen_history(constant_field(grid, 0.3, -0.2), 0.0, 1.0);
  EnsembleSpec ens;
  ens.n_samples = 3;
  ens.base_seed = 5;
  ens.sde_dt = 1e-3;
  const std::vector<Vec2> labels = {{1.0, 1.0}, {2.0, 3.0}, {4.5, 0.7}};

  SUBCASE("backward flow translates against the field") {
    const FlowEnsemble fe = backward_flow(h, labels, 0.5, ens);  // span 0.5 from tf=1
    for (int s = 0; s < ens.n_samples; ++s) {
      for (size_t l = 0; l < labels.size(); ++l) {
        const Vec2 want{labels[l].x - 0.3 * 0.5, labels[l].y + 0.2 * 0.5};
        CHECK(torus_dist(fe.at(s, l), want) <= 1e-6);
      }
    }
  }

  SUBCASE("forward flow translates with the field") {
    const FlowEnsemble fe = forward_flow(h, labels, 0.5, ens);  // span 0.5 from t0=0
    for (size_t l = 0; l < labels.size(); ++l) {
      const Vec2 want{labels[l].x + 0.3 * 0.5, labels[l].y - 0.2 * 0.5};
      CHECK(torus_dist(fe.at(0, l), want) <= 1e-6);
    }
  }

  SUBCASE("all samples coincide to 1e-12") {
    const FlowEnsemble fe = backward_flow(h, labels, 0.25, ens);
    for (int s = 1; s < ens.n_samples; ++s) {
      for (size_t l = 0; l < labels.size(); ++l) {
        CHECK(torus_dist(fe.at(s, l), fe.at(0, l)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("pure diffusion statistics over a zero velocity field") {
  const GridSpec grid(16);
  const double nu = 0.05, tau = 1.0;
  const VelocityHistory h = frozen_history(SpectralField::zero(grid), nu, tau);
  EnsembleSpec ens;
  ens.n_samples = 10000;
  ens.base_seed = 31;
  ens.sde_dt = 1e-3;
  const std::vector<Vec2> labels = {{kPi, kPi}};

  // Output positions are wrapped; displacements here stay below pi, so
  // the minimal signed torus displacement recovers them.
  auto displacement = [](double x) {
    double d = x - kPi;
    if (d > kPi) d -= kTwoPi;
    if (d < -kPi) d += kTwoPi;
    return d;
  };

  const FlowEnsemble fe = backward_flow(h, labels, 0.0, ens);
  std::vector<double> dx(ens.n_samples);
  double sx = 0, sxx = 0;
  for (int s = 0; s < ens.n_samples; ++s) {
    dx[s] = displacement(fe.at(s, 0).x);
    sx += dx[s];
    sxx += dx[s] * dx[s];
  }
  const double mean = sx / ens.n_samples;
  const double var = sxx / ens.n_samples - mean * mean;
  CHECK(var == doctest::Approx(2.0 * nu * tau).epsilon(0.05));

  SUBCASE("forward and backward displacements agree in law (KS distance)") {
    EnsembleSpec ens2 = ens;
    ens2.base_seed = 77;  // independent draw
    const FlowEnsemble ff = forward_flow(h, labels, tau, ens2);
    std::vector<double> dy(ens2.n_samples);
    for (int s = 0; s < ens2.n_samples; ++s) {
      dy[s] = displacement(ff.at(s, 0).x);
    }
    std::sort(dx.begin(), dx.end());
    std::sort(dy.begin(), dy.end());
    double ks = 0.0;
    size_t j = 0;
    for (size_t i = 0; i < dx.size(); ++i) {
      while (j < dy.size() && dy[j] <= dx[i]) ++j;
      ks = std::max(ks, std::abs((i + 1.0) / dx.size() - static_cast<double>(j) / dy.size()));
    }
    CHECK(ks <= 0.03);
  }
}

TEST_CASE("steady Taylor-Green characteristics conserve the stream function") {
  const GridSpec grid(32);
  const VelocityHistory h = frozen_history(taylor_green(0.0, 0.0, grid), 0.0, 1.0);
  EnsembleSpec ens;
  ens.n_samples = 1;
  ens.sde_dt = 1e-3;
  DriftEvaluator drift(h, false);
  const std::vector<Vec2> labels = {{1.0, 2.0}, {4.0, 1.5}, {2.5, 5.0}, {0.3, 3.3}};
  const std::vector<Vec2> end =
      advect_points(h, drift, labels, 1.0, 0.0, FlowDirection::backward, ens, 0);
  for (size_t l = 0; l < labels.size(); ++l) {
    const double psi0 = std::sin(labels[l].x) * std::sin(labels[l].y);
    const double psi1 = std::sin(end[l].x) * std::sin(end[l].y);
    CHECK(std::abs(psi1 - psi0) <= 1e-3);
  }
}

TEST_CASE("nu = 0 flows are invertible round trips") {
  const GridSpec grid(32);
  NsParams p;
  p.nu = 0.0;
  p.dt = 1e-3;
  p.tf = 0.5;
  p.snap_stride = 10;
  const VelocityHistory h = VelocityHistory::solve(random_lowmode(grid, 13, 2, 0.7), p);
  EnsembleSpec ens;
  ens.n_samples = 1;
  ens.sde_dt = 1e-3;
  DriftEvaluator drift(h, false);
  const std::vector<Vec2> labels = {{1.1, 0.4}, {3.0, 3.0}, {5.5, 2.2}};
  const std::vector<Vec2> fwd =
      advect_points(h, drift, labels, 0.0, 0.5, FlowDirection::forward, ens, 0);
  const std::vector<Vec2> back =
      advect_points(h, drift, fwd, 0.5, 0.0, FlowDirection::backward, ens, 0);
  for (size_t l = 0; l < labels.size(); ++l) {
    CHECK(torus_dist(back[l], labels[l]) <= 1e-6);
  }
}

TEST_CASE("flows are bit-identical for identical inputs") {
  const GridSpec grid(16);
  const VelocityHistory h = frozen_history(taylor_green(0.0, 0.0, grid), 0.04, 1.0);
  EnsembleSpec ens;
  ens.n_samples = 8;
  ens.base_seed = 2024;
  ens.sde_dt = 1e-3;
  const std::vector<Vec2> labels = {{1.0, 1.0}, {2.0, 2.0}};
  const FlowEnsemble a = backward_flow(h, labels, 0.3, ens);
  const FlowEnsemble b = backward_flow(h, labels, 0.3, ens);
  REQUIRE(a.positions.size() == b.positions.size());
  for (size_t i = 0; i < a.positions.size(); ++i) {
    CHECK(a.positions[i].x == b.positions[i].x);
    CHECK(a.positions[i].y == b.positions[i].y);
  }
}

TEST_CASE("inviscid advection preserves enclosed area") {
  const GridSpec grid(32);
  const VelocityHistory h = frozen_history(taylor_green(0.0, 0.0, grid), 0.0, 1.0);
  EnsembleSpec ens;
  ens.n_samples = 1;
  ens.sde_dt = 1e-3;
  DriftEvaluator drift(h, false);
  const int m = 2048;
  std::vector<Vec2> circle(m);
  for (int i = 0; i < m; ++i) {
    const double th = kTwoPi * i / m;
    circle[i] = {kPi + std::cos(th), kPi + std::sin(th)};
  }
  const std::vector<Vec2> adv =
      advect_points(h, drift, circle, 1.0, 0.0, FlowDirection::backward, ens, 0);
  auto shoelace = [](const std::vector<Vec2>& p) {
    double a = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
      const Vec2& q = p[i];
      const Vec2& r = p[(i + 1) % p.size()];
      a += q.x * r.y - r.x * q.y;
    }
    return 0.5 * a;
  };
  CHECK(shoelace(adv) == doctest::Approx(kPi).epsilon(1e-4));
}

TEST_CASE("deterministic strong convergence under step refinement") {
  const GridSpec grid(32);
  const VelocityHistory h = frozen_history(taylor_green(0.0, 0.0, grid), 0.0, 1.0);
  const std::vector<Vec2> labels = {{1.3, 2.1}};
  auto endpoint = [&](double dt) {
    EnsembleSpec ens;
    ens.n_samples = 1;
    ens.sde_dt = dt;
    DriftEvaluator drift(h, false);
    return advect_points(h, drift, labels, 1.0, 0.5, FlowDirection::backward, ens, 0)[0];
  };
  const Vec2 ref = endpoint(2.5e-3);
  const Vec2 a = endpoint(2e-2), b = endpoint(1e-2);
  const double ea = std::hypot(a.x - ref.x, a.y - ref.y);
  const double eb = std::hypot(b.x - ref.x, b.y - ref.y);
  CHECK(ea >= 1.8 * eb);
}

TEST_CASE("drift evaluator matches direct summation to 1e-6") {
  const GridSpec grid(32);
  NsParams p;
  p.nu = 0.05;
  p.dt = 1e-3;
  p.tf = 0.5;
  p.snap_stride = 10;
  const VelocityHistory h = VelocityHistory::solve(taylor_green(0.0, 0.0, grid), p);
  DriftEvaluator drift(h, false);
  std::vector<Vec2> pts;
  for (int i = 0; i < 200; ++i) {
    pts.push_back({std::fmod(0.37 * i, kTwoPi), std::fmod(1.13 * i, kTwoPi)});
  }
  for (double t : {0.1, 0.32, 0.5}) {
    std::vector<Vec2> fast(pts.size());
    drift.eval(t, pts, fast);
    const SpectralField u = h.sample(t);
    const std::vector<Vec2> exact = u.evaluate_at(pts);
    for (size_t i = 0; i < pts.size(); ++i) {
      CHECK(std::abs(fast[i].x - exact[i].x) <= 1e-6);
      CHECK(std::abs(fast[i].y - exact[i].y) <= 1e-6);
    }
  }
}
