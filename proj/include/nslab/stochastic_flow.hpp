#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nslab/ns_solver.hpp"
#include "nslab/spectral_field.hpp"

namespace nslab {

struct EnsembleSpec {
  int n_samples = 1;
  std::uint64_t base_seed = 0;
  double sde_dt = 1e-3;
  // Evaluate the drift by direct Fourier summation instead of the
  // tabulated interpolant (slower; for high-precision checks).
  bool exact_drift = false;

  void validate() const;
};

enum class FlowDirection { backward, forward };

// Tracer endpoints for every sample of an ensemble. Positions are wrapped
// to [0, 2pi)^2 on output; the integrator works unwrapped internally.
struct FlowEnsemble {
  std::vector<Vec2> labels;
  double t_start = 0.0;  // anchoring time of the labels
  double t_end = 0.0;
  double nu = 0.0;
  int n_samples = 0;
  std::vector<Vec2> positions;  // [sample * labels.size() + label]

  Vec2 at(int sample, size_t label) const {
    return positions[static_cast<size_t>(sample) * labels.size() + label];
  }
};

// Standard 2D normal deviate, a pure function of (base_seed, sample_index,
// step_index). The same triple always yields the same increment, and the
// increment is shared by every tracer of a sample.
Vec2 brownian_increment(std::uint64_t base_seed, std::uint64_t sample_index,
                        std::uint64_t step_index);

// Fast batch evaluation of the history's velocity at arbitrary points.
// Default path: per requested time, tabulate the field and its exact
// spectral derivatives on a fine grid and interpolate with Hermite
// bicubics; the grid is sized so the interpolation error is <= 1e-6.
class DriftEvaluator {
 public:
  DriftEvaluator(const VelocityHistory& h, bool exact);

  void eval(double t, std::span<const Vec2> pts, std::span<Vec2> out);
  int fine_n() const { return fine_n_; }

 private:
  struct Table {
    double t = 0.0;
    long stamp = -1;
    // Eight channels interleaved per fine-grid node (one cache line):
    // u, du/dx, du/dy, d2u/dxdy, then the same four for v. Stored as
    // float: the rounding (~6e-8 relative) sits well under the 1e-6
    // interpolation budget and halves the table's memory traffic.
    std::vector<float> g;
  };

  const VelocityHistory& h_;
  bool exact_;
  int fine_n_ = 0;
  long clock_ = 0;
  std::vector<Table> cache_;
  std::vector<std::pair<double, SpectralField>> exact_cache_;

  const Table& table_for(double t);
  const SpectralField& field_for(double t);
};

// Integrate dx = +/- u dt + sqrt(2 nu) dW for one sample's noise stream
// with a Heun (explicit trapezoid) drift corrector; returns unwrapped
// endpoint positions. Step index 0 starts at t_from.
std::vector<Vec2> advect_points(const VelocityHistory& h, DriftEvaluator& drift,
                                std::span<const Vec2> labels, double t_from, double t_to,
                                FlowDirection dir, const EnsembleSpec& ens, int sample_index);

// Batched variant: integrates all samples in `samples` step-synchronously
// (each drift table is built once per step). positions has layout
// [index-in-samples * labels.size() + label] and is overwritten.
void advect_ensemble(const VelocityHistory& h, DriftEvaluator& drift,
                     std::span<const Vec2> labels, double t_from, double t_to, FlowDirection dir,
                     const EnsembleSpec& ens, std::span<const int> samples,
                     std::vector<Vec2>& positions);

// Backward stochastic flow: labels anchored at t_from (default tf),
// integrated back to t.
FlowEnsemble backward_flow(const VelocityHistory& h, std::span<const Vec2> labels, double t,
                           const EnsembleSpec& ens);
FlowEnsemble backward_flow(const VelocityHistory& h, std::span<const Vec2> labels, double t,
                           const EnsembleSpec& ens, double t_from);

// Forward stochastic flow: labels anchored at t_from (default t0),
// integrated forward to t.
FlowEnsemble forward_flow(const VelocityHistory& h, std::span<const Vec2> labels, double t,
                          const EnsembleSpec& ens);
FlowEnsemble forward_flow(const VelocityHistory& h, std::span<const Vec2> labels, double t,
                          const EnsembleSpec& ens, double t_from);

}  // namespace nslab
