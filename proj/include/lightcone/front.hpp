#pragma once

#include <functional>
#include <vector>

#include "lightcone/bounds.hpp"
#include "lightcone/dynamics.hpp"

namespace lightcone {

// Threshold used by the CLI when none is given on the command line.
inline constexpr double kDefaultFrontEpsilon = 0.1;

// One arrival point of the light cone: the first time the curve at distance r
// reaches the threshold.
struct FrontPoint {
  double r = 0.0;
  double t = 0.0;
};

// First t with value >= epsilon per row, linearly interpolated between the two
// bracketing grid times. Rows that never cross are omitted. Rows whose first
// grid value already meets the threshold report the first grid time (no
// extrapolation left of the grid). Non-monotone rows use their first crossing.
// Output is sorted by r. epsilon must lie in (0, 2): below the trivial ceiling,
// above the floor. Operates on the reported (ceiling-saturated) values, which
// agree with the raw curve at every crossing since epsilon < 2.
std::vector<FrontPoint> extract_front(const BoundCurve& curve, double epsilon);
std::vector<FrontPoint> extract_front(const CommutatorProfile& profile,
                                      double epsilon);

// Values of the curve along the ray r = t^beta. `log_curve` returns the log of
// the bound (log space: inside the cone the raw value overflows long before
// the tail behaviour is visible). `decreasing` is true when the log values are
// non-increasing along the whole ray, within 1e-12; an identically -inf ray
// (curve that is exactly zero) counts as decreasing. beta must be positive and
// ts must be positive and ascending.
struct BetaProbeResult {
  double beta = 0.0;
  std::vector<double> ts;
  std::vector<double> log_values;
  std::vector<double> values;  // exp(log_values); may overflow to inf
  bool decreasing = false;
};

BetaProbeResult beta_probe(
    const std::function<double(double r, double t)>& log_curve, double beta,
    const std::vector<double>& ts);

// Least-squares power-law fit t_front ~ r^zeta on log-log axes.
struct FrontFit {
  double epsilon = kDefaultFrontEpsilon;
  std::vector<FrontPoint> points;  // the in-window points the fit used
  double zeta_hat = 0.0;
  double zeta_stderr = 0.0;        // from fit residuals
  double r_min = 0.0;              // fit window
  double r_max = 0.0;
  bool sane = false;               // zeta_hat in (0, 1.5]
  std::vector<BetaProbeResult> probes;  // optional ray probes, filled by caller
};

// Restricts `points` to r in [r_min, r_max] and fits. Requires at least five
// in-window points (insufficient_data otherwise), all with r, t > 0 and
// strictly increasing r. `epsilon` only labels the result. zeta_stderr is the
// standard error of the slope estimated from the residual variance; fits
// outside (0, 1.5] are returned with sane = false rather than rejected.
FrontFit fit_exponent(const std::vector<FrontPoint>& points, double r_min,
                      double r_max, double epsilon = kDefaultFrontEpsilon);

}  // namespace lightcone
