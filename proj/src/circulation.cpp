#include "nslab/circulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nslab {

namespace {

constexpr size_t kMarkerCap = 100000;
constexpr double kJacobianEps = 1e-4;

// Subdivide every segment of the closed polyline into 2^level pieces.
std::vector<Vec2> refine_level(const std::vector<Vec2>& markers, int level) {
  if (level == 0) return markers;
  const size_t pieces = size_t{1} << level;
  std::vector<Vec2> out;
  out.reserve(markers.size() * pieces);
  const size_t M = markers.size();
  for (size_t i = 0; i < M; ++i) {
    const Vec2 a = markers[i];
    const Vec2 b = markers[(i + 1) % M];
    for (size_t j = 0; j < pieces; ++j) {
      const double s = static_cast<double>(j) / pieces;
      out.push_back(a + (b - a) * s);
    }
  }
  return out;
}

double max_adjacent_spacing(std::span<const Vec2> pts) {
  double m = 0.0;
  const size_t M = pts.size();
  for (size_t i = 0; i < M; ++i) {
    m = std::max(m, (pts[(i + 1) % M] - pts[i]).norm());
  }
  return m;
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  auto cross = [](Vec2 u, Vec2 v) { return u.x * v.y - u.y * v.x; };
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

void check_simple(const std::vector<Vec2>& pts) {
  const size_t M = pts.size();
  for (size_t i = 0; i < M; ++i) {
    const Vec2 a = pts[i], b = pts[(i + 1) % M];
    for (size_t j = i + 2; j < M; ++j) {
      if (i == 0 && j == M - 1) continue;  // adjacent through the closure
      if (segments_intersect(a, b, pts[j], pts[(j + 1) % M])) {
        throw std::invalid_argument("LoopState: loop is not simple");
      }
    }
  }
}

}  // namespace

LoopState::LoopState(std::vector<Vec2> markers, double h_max, double anchor_time)
    : markers_(std::move(markers)), h_max_(h_max), anchor_time_(anchor_time) {}

LoopState LoopState::polyline(std::vector<Vec2> vertices, double h_max, double anchor_time) {
  if (vertices.size() < 3) throw std::invalid_argument("LoopState: need >= 3 vertices");
  if (h_max <= 0.0) throw std::invalid_argument("LoopState: h_max must be > 0");
  check_simple(vertices);
  std::vector<Vec2> markers;
  const size_t M = vertices.size();
  for (size_t i = 0; i < M; ++i) {
    const Vec2 a = vertices[i];
    const Vec2 b = vertices[(i + 1) % M];
    const double len = (b - a).norm();
    const size_t pieces = std::max<size_t>(1, static_cast<size_t>(std::ceil(len / h_max - 1e-12)));
    for (size_t j = 0; j < pieces; ++j) {
      markers.push_back(a + (b - a) * (static_cast<double>(j) / pieces));
    }
  }
  // Keep >= 16 markers by uniform doubling.
  while (markers.size() < 16) markers = refine_level(markers, 1);
  if (markers.size() > kMarkerCap) throw std::invalid_argument("LoopState: marker cap exceeded");
  return LoopState(std::move(markers), h_max, anchor_time);
}

LoopState LoopState::square(Vec2 lo, Vec2 hi, double h_max, double anchor_time) {
  if (!(hi.x > lo.x && hi.y > lo.y)) throw std::invalid_argument("LoopState: degenerate square");
  return polyline({{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}}, h_max, anchor_time);
}

LoopState LoopState::circle(Vec2 center, double radius, double h_max, double anchor_time) {
  if (radius <= 0.0) throw std::invalid_argument("LoopState: radius must be > 0");
  if (h_max <= 0.0) throw std::invalid_argument("LoopState: h_max must be > 0");
  const size_t M = std::max<size_t>(
      16, static_cast<size_t>(std::ceil(kTwoPi * radius / h_max)));
  if (M > kMarkerCap) throw std::invalid_argument("LoopState: marker cap exceeded");
  std::vector<Vec2> markers(M);
  for (size_t i = 0; i < M; ++i) {
    const double a = kTwoPi * i / M;
    markers[i] = {center.x + radius * std::cos(a), center.y + radius * std::sin(a)};
  }
  return LoopState(std::move(markers), h_max, anchor_time);
}

LoopState LoopState::from_advected(std::vector<Vec2> markers, double h_max, double anchor_time) {
  if (markers.size() < 16) throw std::invalid_argument("LoopState: need >= 16 markers");
  return LoopState(std::move(markers), h_max, anchor_time);
}

double LoopState::max_spacing() const { return max_adjacent_spacing(markers_); }

LoopState LoopState::reversed() const {
  std::vector<Vec2> rev(markers_.rbegin(), markers_.rend());
  return LoopState(std::move(rev), h_max_, anchor_time_);
}

double circulation(const SpectralField& f, std::span<const Vec2> markers) {
  const size_t M = markers.size();
  double sum = 0.0;
  for (size_t i = 0; i < M; ++i) {
    const Vec2 a = markers[i];
    const Vec2 b = markers[(i + 1) % M];
    const Vec2 mid = (a + b) * 0.5;
    sum += f.evaluate(mid).dot(b - a);
  }
  return sum;
}

double circulation(const SpectralField& f, const LoopState& loop) {
  return circulation(f, loop.markers());
}

bool CirculationEstimate::passes() const {
  return std::abs(mean - target) <= 3.0 * stderr_ + 0.01 * std::abs(target);
}

namespace {

// Advect one sample's loop markers with uniform midpoint refinement until
// the advected spacing fits under h_max.
std::vector<Vec2> advect_loop_markers(const VelocityHistory& h, DriftEvaluator& drift,
                                      const LoopState& loop, double t_to, int sample,
                                      const EnsembleSpec& ens, FlowDirection dir,
                                      int* level_out = nullptr) {
  for (int level = 0;; ++level) {
    const std::vector<Vec2> labels = refine_level(loop.markers(), level);
    if (labels.size() > kMarkerCap) {
      throw std::runtime_error("advect_loop: loop too stretched at this resolution (marker cap)");
    }
    std::vector<Vec2> pos =
        advect_points(h, drift, labels, loop.anchor_time(), t_to, dir, ens, sample);
    if (max_adjacent_spacing(pos) <= loop.h_max()) {
      if (level_out) *level_out = level;
      return pos;
    }
  }
}

CirculationEstimate summarize(const std::vector<double>& circ, double target) {
  CirculationEstimate est;
  est.n_samples = static_cast<int>(circ.size());
  est.target = target;
  double mean = 0.0;
  for (double c : circ) mean += c;
  mean /= circ.size();
  est.mean = mean;
  if (circ.size() >= 2) {
    double ss = 0.0;
    for (double c : circ) ss += (c - mean) * (c - mean);
    est.stderr_ = std::sqrt(ss / (circ.size() - 1) / circ.size());
  }
  est.z_score = est.stderr_ > 0.0 ? (est.mean - est.target) / est.stderr_ : 0.0;
  return est;
}

// Shared engine for the backward (Kelvin) and forward (anti-causal)
// martingale checks: per-sample loop advection with level-batched
// refinement, then the circulation of u(., t) over each advected loop.
std::vector<double> martingale_sample_circulations(const VelocityHistory& h,
                                                   const LoopState& loop, double t,
                                                   const EnsembleSpec& ens, FlowDirection dir) {
  ens.validate();
  const double tp = loop.anchor_time();
  const double eps = 1e-12;
  if (dir == FlowDirection::backward ? t > tp + eps : t < tp - eps) {
    throw std::invalid_argument("martingale check: t on the wrong side of the anchor time");
  }
  const SpectralField u_t = h.sample(t);
  std::vector<double> circ(ens.n_samples, 0.0);
  if (std::abs(t - tp) <= eps) {
    const double c = circulation(u_t, loop);
    std::fill(circ.begin(), circ.end(), c);
    return circ;
  }
  DriftEvaluator drift(h, ens.exact_drift);
  std::vector<int> pending(ens.n_samples);
  for (int s = 0; s < ens.n_samples; ++s) pending[s] = s;
  std::vector<Vec2> pos;
  // Probe one sample at the base resolution and predict the refinement
  // level from its stretch factor, so the full ensemble skips levels that
  // are bound to fail. A wrong guess only costs that sample a replay.
  int level = 0;
  if (ens.n_samples > 1) {
    const std::vector<Vec2> probe = advect_points(h, drift, loop.markers(), tp, t, dir, ens,
                                                  pending.front());
    const double stretch = max_adjacent_spacing(probe) / loop.h_max();
    if (stretch > 1.0) level = static_cast<int>(std::ceil(std::log2(stretch)));
  }
  for (; !pending.empty(); ++level) {
    const std::vector<Vec2> labels = refine_level(loop.markers(), level);
    if (labels.size() > kMarkerCap) {
      throw std::runtime_error("martingale check: loop too stretched (marker cap)");
    }
    advect_ensemble(h, drift, labels, tp, t, dir, ens, pending, pos);
    const size_t L = labels.size();
    std::vector<int> still;
    for (size_t s = 0; s < pending.size(); ++s) {
      const std::span<const Vec2> mk(pos.data() + s * L, L);
      if (max_adjacent_spacing(mk) <= loop.h_max()) {
        circ[pending[s]] = circulation(u_t, mk);
      } else {
        still.push_back(pending[s]);
      }
    }
    pending.swap(still);
  }
  return circ;
}

}  // namespace

LoopState advect_loop(const VelocityHistory& h, const LoopState& loop, double t_to, int sample,
                      const EnsembleSpec& ens, FlowDirection dir) {
  DriftEvaluator drift(h, ens.exact_drift);
  std::vector<Vec2> pos = advect_loop_markers(h, drift, loop, t_to, sample, ens, dir);
  return LoopState::from_advected(std::move(pos), loop.h_max(), t_to);
}

std::vector<double> kelvin_sample_circulations(const VelocityHistory& h, const LoopState& loop,
                                               double t, const EnsembleSpec& ens) {
  return martingale_sample_circulations(h, loop, t, ens, FlowDirection::backward);
}

CirculationEstimate kelvin_martingale_check(const VelocityHistory& h, const LoopState& loop,
                                            double t, const EnsembleSpec& ens) {
  const double target = circulation(h.sample(loop.anchor_time()), loop);
  return summarize(kelvin_sample_circulations(h, loop, t, ens), target);
}

namespace {

// Labels for one Weber evaluation: the base points, then a four-point
// Jacobian stencil per base point.
std::vector<Vec2> weber_labels(const std::vector<Vec2>& base) {
  std::vector<Vec2> labels;
  labels.reserve(5 * base.size());
  labels.insert(labels.end(), base.begin(), base.end());
  for (const Vec2& a : base) {
    labels.push_back({a.x + kJacobianEps, a.y});
    labels.push_back({a.x - kJacobianEps, a.y});
    labels.push_back({a.x, a.y + kJacobianEps});
    labels.push_back({a.x, a.y - kJacobianEps});
  }
  return labels;
}

std::vector<Vec2> weber_from_positions(const SpectralField& u_t, std::span<const Vec2> pos,
                                       size_t M) {
  std::vector<Vec2> w(M);
  for (size_t i = 0; i < M; ++i) {
    const Vec2 u = u_t.evaluate(pos[i]);
    const Vec2 xp = pos[M + 4 * i + 0], xm = pos[M + 4 * i + 1];
    const Vec2 yp = pos[M + 4 * i + 2], ym = pos[M + 4 * i + 3];
    Mat2 jac;  // jac(i, j) = d x_i / d a_j
    jac(0, 0) = (xp.x - xm.x) / (2 * kJacobianEps);
    jac(1, 0) = (xp.y - xm.y) / (2 * kJacobianEps);
    jac(0, 1) = (yp.x - ym.x) / (2 * kJacobianEps);
    jac(1, 1) = (yp.y - ym.y) / (2 * kJacobianEps);
    w[i] = jac.tmul(u);
  }
  return w;
}

}  // namespace

std::vector<Vec2> weber_velocity(const VelocityHistory& h, const LoopState& loop, double t,
                                 int sample, const EnsembleSpec& ens) {
  const std::vector<Vec2>& mk = loop.markers();
  DriftEvaluator drift(h, ens.exact_drift);
  const std::vector<Vec2> pos = advect_points(h, drift, weber_labels(mk), loop.anchor_time(), t,
                                              FlowDirection::backward, ens, sample);
  return weber_from_positions(h.sample(t), pos, mk.size());
}

std::vector<std::pair<double, double>> weber_identity_samples(const VelocityHistory& h,
                                                              const LoopState& loop, double t,
                                                              const EnsembleSpec& ens) {
  const std::vector<Vec2>& mk = loop.markers();
  const size_t M = mk.size();
  // Midpoints carry the Weber quadrature; a midpoint loop keeps the same
  // segment geometry so both sides discretize the same line integral.
  std::vector<Vec2> mid(M);
  for (size_t i = 0; i < M; ++i) mid[i] = (mk[i] + mk[(i + 1) % M]) * 0.5;
  // One batched advection: the Weber stencils around the midpoints plus
  // the plain markers for the right-hand side.
  std::vector<Vec2> labels = weber_labels(mid);
  labels.insert(labels.end(), mk.begin(), mk.end());

  DriftEvaluator drift(h, ens.exact_drift);
  std::vector<int> samples(ens.n_samples);
  for (int s = 0; s < ens.n_samples; ++s) samples[s] = s;
  std::vector<Vec2> pos;
  advect_ensemble(h, drift, labels, loop.anchor_time(), t, FlowDirection::backward, ens, samples,
                  pos);

  const SpectralField u_t = h.sample(t);
  const size_t L = labels.size();
  std::vector<std::pair<double, double>> out(ens.n_samples);
  for (int s = 0; s < ens.n_samples; ++s) {
    const std::span<const Vec2> ps(pos.data() + s * L, L);
    const std::vector<Vec2> w = weber_from_positions(u_t, ps.first(5 * M), M);
    double lhs = 0.0;
    for (size_t i = 0; i < M; ++i) lhs += w[i].dot(mk[(i + 1) % M] - mk[i]);
    const double rhs = circulation(u_t, ps.subspan(5 * M));
    out[s] = {lhs, rhs};
  }
  return out;
}

std::pair<double, double> weber_circulation_identity(const VelocityHistory& h,
                                                     const LoopState& loop, double t, int sample,
                                                     const EnsembleSpec& ens) {
  EnsembleSpec one = ens;
  one.n_samples = sample + 1;
  // Sample indexing feeds the noise stream directly, so truncating the
  // ensemble to [0, sample] reproduces that sample's path exactly.
  return weber_identity_samples(h, loop, t, one).back();
}

std::vector<double> anti_kelvin_sample_circulations(const VelocityHistory& h,
                                                    const LoopState& loop, double t,
                                                    const EnsembleSpec& ens) {
  const VelocityHistory rev = h.time_reversed();
  return martingale_sample_circulations(rev, loop, t, ens, FlowDirection::forward);
}

CirculationEstimate anti_kelvin_check(const VelocityHistory& h, const LoopState& loop, double t,
                                      const EnsembleSpec& ens) {
  const VelocityHistory rev = h.time_reversed();
  const double target = circulation(rev.sample(loop.anchor_time()), loop);
  return summarize(martingale_sample_circulations(rev, loop, t, ens, FlowDirection::forward),
                   target);
}

}  // namespace nslab
