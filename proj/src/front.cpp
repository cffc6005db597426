#include "lightcone/front.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lightcone/errors.hpp"

namespace lightcone {

namespace {

// Scans one row of a value grid for the first threshold crossing.
// Returns false when the row never reaches epsilon.
bool row_front(const Eigen::MatrixXd& values, Eigen::Index row,
               const std::vector<double>& times, double epsilon,
               double* t_front) {
  const Eigen::Index nt = values.cols();
  for (Eigen::Index k = 0; k < nt; ++k) {
    const double v = values(row, k);
    if (v < epsilon) continue;
    if (k == 0) {
      *t_front = times[0];
      return true;
    }
    const double v0 = values(row, k - 1);
    const double t0 = times[static_cast<std::size_t>(k - 1)];
    const double t1 = times[static_cast<std::size_t>(k)];
    // v0 < epsilon <= v, so the denominator is positive.
    *t_front = t0 + (t1 - t0) * (epsilon - v0) / (v - v0);
    return true;
  }
  return false;
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < 2.0))
    throw invalid_input_error(
        "extract_front: epsilon must lie in (0, 2), got " +
        std::to_string(epsilon));
}

std::vector<FrontPoint> extract_rows(const Eigen::MatrixXd& values,
                                     const std::vector<double>& rs,
                                     const std::vector<double>& times,
                                     double epsilon) {
  check_epsilon(epsilon);
  if (values.rows() != static_cast<Eigen::Index>(rs.size()) ||
      values.cols() != static_cast<Eigen::Index>(times.size()))
    throw invalid_input_error("extract_front: value grid shape mismatch");

  std::vector<FrontPoint> points;
  points.reserve(rs.size());
  for (Eigen::Index row = 0; row < values.rows(); ++row) {
    double t_front = 0.0;
    if (row_front(values, row, times, epsilon, &t_front))
      points.push_back({rs[static_cast<std::size_t>(row)], t_front});
  }
  std::sort(points.begin(), points.end(),
            [](const FrontPoint& a, const FrontPoint& b) { return a.r < b.r; });
  return points;
}

}  // namespace

std::vector<FrontPoint> extract_front(const BoundCurve& curve, double epsilon) {
  return extract_rows(curve.values, curve.rs, curve.ts, epsilon);
}

std::vector<FrontPoint> extract_front(const CommutatorProfile& profile,
                                      double epsilon) {
  return extract_rows(profile.values, profile.probe_distances, profile.times,
                      epsilon);
}

BetaProbeResult beta_probe(
    const std::function<double(double r, double t)>& log_curve, double beta,
    const std::vector<double>& ts) {
  if (!log_curve) throw invalid_input_error("beta_probe: empty curve function");
  if (!(beta > 0.0))
    throw invalid_input_error("beta_probe: beta must be positive");
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (!(ts[k] > 0.0))
      throw invalid_input_error("beta_probe: probe times must be positive");
    if (k > 0 && !(ts[k] > ts[k - 1]))
      throw invalid_input_error("beta_probe: probe times must be ascending");
  }

  BetaProbeResult out;
  out.beta = beta;
  out.ts = ts;
  out.log_values.reserve(ts.size());
  out.values.reserve(ts.size());
  for (double t : ts) {
    const double lv = log_curve(std::pow(t, beta), t);
    out.log_values.push_back(lv);
    out.values.push_back(std::exp(lv));
  }
  out.decreasing = true;
  for (std::size_t k = 1; k < out.log_values.size(); ++k) {
    // -inf <= -inf + 1e-12 holds, so an identically zero curve is decreasing.
    if (!(out.log_values[k] <= out.log_values[k - 1] + 1e-12)) {
      out.decreasing = false;
      break;
    }
  }
  return out;
}

FrontFit fit_exponent(const std::vector<FrontPoint>& points, double r_min,
                      double r_max, double epsilon) {
  check_epsilon(epsilon);
  if (!(r_min > 0.0) || !(r_max > r_min))
    throw invalid_input_error("fit_exponent: need 0 < r_min < r_max");

  FrontFit fit;
  fit.epsilon = epsilon;
  fit.r_min = r_min;
  fit.r_max = r_max;
  for (const FrontPoint& p : points)
    if (p.r >= r_min && p.r <= r_max) fit.points.push_back(p);

  const std::size_t n = fit.points.size();
  if (n < 5)
    throw insufficient_data_error(
        "fit_exponent: need at least 5 front points inside the window, got " +
        std::to_string(n));
  std::sort(fit.points.begin(), fit.points.end(),
            [](const FrontPoint& a, const FrontPoint& b) { return a.r < b.r; });
  for (std::size_t k = 0; k < n; ++k) {
    if (!(fit.points[k].r > 0.0) || !(fit.points[k].t > 0.0))
      throw invalid_input_error("fit_exponent: points must have r, t > 0");
    if (k > 0 && !(fit.points[k].r > fit.points[k - 1].r))
      throw invalid_input_error(
          "fit_exponent: front points must be strictly increasing in r");
  }

  double sx = 0.0, sy = 0.0;
  for (const FrontPoint& p : fit.points) {
    sx += std::log(p.r);
    sy += std::log(p.t);
  }
  const double xbar = sx / static_cast<double>(n);
  const double ybar = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (const FrontPoint& p : fit.points) {
    const double dx = std::log(p.r) - xbar;
    sxx += dx * dx;
    sxy += dx * (std::log(p.t) - ybar);
  }
  // sxx > 0 is guaranteed by strictly increasing r with n >= 5.
  fit.zeta_hat = sxy / sxx;
  const double intercept = ybar - fit.zeta_hat * xbar;
  double rss = 0.0;
  for (const FrontPoint& p : fit.points) {
    const double resid =
        std::log(p.t) - (intercept + fit.zeta_hat * std::log(p.r));
    rss += resid * resid;
  }
  fit.zeta_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  fit.sane = fit.zeta_hat > 0.0 && fit.zeta_hat <= 1.5;
  return fit;
}

}  // namespace lightcone
