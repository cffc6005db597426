#include "lightcone/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace lightcone {

namespace {

constexpr double kEuler = 2.718281828459045235360287471352662498;

double logsumexp2(double a, double b) {
  if (std::isinf(a) && a < 0) return b;
  if (std::isinf(b) && b < 0) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

std::string lowercase(const std::string& s) {
  std::string u;
  for (char c : s) u.push_back(std::tolower(static_cast<unsigned char>(c)));
  return u;
}

}  // namespace

LatticeCouplingLaw::LatticeCouplingLaw(const LatticeSpec& lattice, double alpha,
                                       double j0)
    : lattice_(lattice), alpha_(alpha), j0_(j0) {
  if (!(alpha > 0) || !(j0 > 0))
    throw invalid_input_error("coupling law: alpha and j0 must be positive");
  const int n = lattice_.n_sites();
  if (n > kMaxMatrixSites)
    throw resource_limit_error("coupling law: lattice too large for matrices");
  dist_.resize(n, n);
  coupling_.resize(n, n);
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y) {
      const double d = distance(lattice_, y, z);
      dist_(y, z) = d;
      coupling_(y, z) = y == z ? 0.0 : j0_ / std::pow(d, alpha_);
    }
}

double LatticeCouplingLaw::lambda_sr(double chi) const {
  if (!(chi >= 1)) throw invalid_input_error("lambda_sr: chi must be >= 1");
  const int n = lattice_.n_sites();
  double best = 0;
  for (int y = 0; y < n; ++y) {
    double s = 0;
    for (int z = 0; z < n; ++z)
      if (z != y && dist_(y, z) <= chi) s += coupling_(y, z);
    best = std::max(best, s);
  }
  return best;
}

double LatticeCouplingLaw::lambda_chi(double chi) const {
  if (!(chi >= 1)) throw invalid_input_error("lambda_chi: chi must be >= 1");
  const int n = lattice_.n_sites();
  double best = 0;
  for (int y = 0; y < n; ++y) {
    double s = 0;
    for (int z = 0; z < n; ++z)
      if (dist_(y, z) > chi) s += coupling_(y, z);
    best = std::max(best, s);
  }
  return best;
}

namespace {

// sum_{d=m}^{inf} d^{-alpha}: forty explicit terms, then Euler-Maclaurin.
double power_tail(double alpha, double m) {
  double s = 0;
  const double a = m + 40;
  // Integer offset, not d += 1: above 2^53 a double +1 step can stall.
  for (int k = 0; k < 40; ++k) s += std::pow(m + k, -alpha);
  s += std::pow(a, 1 - alpha) / (alpha - 1);
  s += std::pow(a, -alpha) * 0.5;
  s += alpha * std::pow(a, -alpha - 1) / 12.0;
  s -= alpha * (alpha + 1) * (alpha + 2) * std::pow(a, -alpha - 3) / 720.0;
  s += alpha * (alpha + 1) * (alpha + 2) * (alpha + 3) * (alpha + 4) *
       std::pow(a, -alpha - 5) / 30240.0;
  return s;
}

}  // namespace

InfiniteChainLaw::InfiniteChainLaw(double alpha, double j0)
    : alpha_(alpha), j0_(j0) {
  if (!(alpha > 1))
    throw invalid_input_error(
        "infinite chain: alpha must exceed 1 for summable couplings");
  if (!(j0 > 0)) throw invalid_input_error("infinite chain: j0 must be positive");
}

double InfiniteChainLaw::lambda_sr(double chi) const {
  if (!(chi >= 1)) throw invalid_input_error("lambda_sr: chi must be >= 1");
  const double m = std::floor(chi);
  return 2 * j0_ * (power_tail(alpha_, 1) - power_tail(alpha_, m + 1));
}

double InfiniteChainLaw::lambda_chi(double chi) const {
  if (!(chi >= 1)) throw invalid_input_error("lambda_chi: chi must be >= 1");
  const double m = std::floor(chi);
  return 2 * j0_ * power_tail(alpha_, m + 1);
}

BoundParams make_bound_params(const CouplingLaw& law, double chi, double t,
                              double g, double b) {
  if (!(chi >= 1)) throw invalid_input_error("bound params: chi must be >= 1");
  if (!(t >= 0)) throw invalid_input_error("bound params: t must be >= 0");
  if (!(g > 0)) throw invalid_input_error("bound params: g must be positive");
  if (!(b >= 0)) throw invalid_input_error("bound params: b must be >= 0");
  BoundParams p;
  p.alpha = law.alpha();
  p.D = law.dimension();
  p.j0 = law.j0();
  p.chi = chi;
  p.t = t;
  p.lambda_sr = law.lambda_sr(chi);
  p.lambda_chi = law.lambda_chi(chi);
  p.kappa = kEuler / (kEuler - 1);
  p.c = 2 * (1 + kEuler);
  p.v = 4 * kEuler * p.lambda_sr;
  p.R = chi * p.v * t;
  p.g = g;
  p.b = b;
  p.vartheta = g * 4 * std::pow(p.kappa, 3) * p.c * p.c;
  p.v_chi = p.vartheta * std::pow(p.R, p.D) * p.lambda_chi;
  p.effective_kappa_sq = 2 * std::pow(6.0, p.alpha) * p.kappa * p.kappa;
  return p;
}

Kernel build_kernel(const LatticeSpec& lattice, KernelKind kind, double R,
                    double chi, double alpha) {
  if (kind == KernelKind::Jlr)
    throw invalid_input_error(
        "build_kernel: the long-range kernel comes from a coupling split");
  if (!(R > 0)) throw invalid_input_error("build_kernel: R must be positive");
  if (!(chi >= 1)) throw invalid_input_error("build_kernel: chi must be >= 1");
  if (kind == KernelKind::F && !(alpha > 0))
    throw invalid_input_error("build_kernel: alpha must be positive");
  const int n = lattice.n_sites();
  if (n > kMaxMatrixSites)
    throw resource_limit_error("build_kernel: lattice too large");
  Kernel k;
  k.kind = kind;
  k.lattice = lattice;
  k.R = R;
  k.chi = chi;
  k.alpha = alpha;
  k.values.resize(n, n);
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y) {
      const double d = distance(lattice, y, z);
      if (kind == KernelKind::K)
        k.values(y, z) = d <= 2 * R ? 1.0 : std::exp(-(d - 2 * R) / (2 * chi));
      else
        k.values(y, z) = d <= 6 * R ? 1.0 : std::pow(6 * R / d, alpha);
    }
  return k;
}

Kernel jlr_matrix_with_diagonal(const CouplingSplit& split, double kappa) {
  if (!(kappa > 0))
    throw invalid_input_error("jlr matrix: kappa must be positive");
  Kernel k;
  k.kind = KernelKind::Jlr;
  k.lattice = split.lattice;
  k.R = 0;
  k.chi = split.chi;
  k.alpha = split.alpha;
  k.values = split.long_part;
  k.values.diagonal().setConstant(kappa * split.lambda_chi);
  return k;
}

double j_a_series(const Kernel& k, const Kernel& jlr, int a, int i, int j,
                  const BoundParams& params, int a_cap) {
  if (k.kind != KernelKind::K || jlr.kind != KernelKind::Jlr)
    throw invalid_input_error("j_a_series: expects a K kernel and a Jlr kernel");
  const Eigen::Index n = k.values.rows();
  if (jlr.values.rows() != n)
    throw invalid_input_error("j_a_series: kernels on different lattices");
  if (i < 0 || j < 0 || i >= n || j >= n)
    throw invalid_input_error("j_a_series: site index out of range");
  if (a < 1) throw invalid_input_error("j_a_series: a must be >= 1");
  if (a > a_cap)
    throw resource_limit_error("j_a_series: order " + std::to_string(a) +
                               " above the cap " + std::to_string(a_cap));
  Eigen::VectorXd y = k.values.col(i);  // kernels are symmetric
  for (int step = 0; step < a; ++step) {
    y = jlr.values * y;
    y = k.values * y;
  }
  const double pre = params.kappa * params.kappa *
                     std::pow(2 * params.kappa * params.kappa * params.c *
                                  params.c,
                              a);
  return pre * y(j);
}

ConvolutionReport verify_convolution(const Kernel& k, const Kernel& jlr,
                                     const Kernel& f,
                                     const BoundParams& params) {
  const Eigen::Index n = k.values.rows();
  if (jlr.values.rows() != n || f.values.rows() != n)
    throw invalid_input_error("verify_convolution: kernel size mismatch");
  if (std::abs(k.R - params.R) > 1e-9 * std::max(1.0, params.R) ||
      std::abs(k.chi - params.chi) > 1e-9 * params.chi)
    throw invalid_input_error(
        "verify_convolution: kernel scales disagree with params");

  ConvolutionReport rep;
  rep.degenerate = params.lambda_chi == 0;
  rep.algebraic_asserted =
      params.v * params.t > params.alpha * std::log(params.alpha);
  const double denom_base = 2 * params.kappa * params.lambda_chi;

  Eigen::MatrixXd G = k.values * jlr.values;
  for (Eigen::Index z1 = 0; z1 < n; ++z1)
    for (Eigen::Index z2 = 0; z2 < n; ++z2) {
      const double ratio =
          rep.degenerate ? 0.0
                         : G(z1, z2) / (denom_base * f.values(z1, z2));
      const double d = distance(k.lattice, static_cast<int>(z1),
                                static_cast<int>(z2));
      if (d <= 6 * k.R)
        rep.trivial_max_ratio = std::max(rep.trivial_max_ratio, ratio);
      else
        rep.algebraic_max_ratio = std::max(rep.algebraic_max_ratio, ratio);
      if (ratio > rep.max_ratio) {
        rep.max_ratio = ratio;
        rep.argmax_z1 = static_cast<int>(z1);
        rep.argmax_z2 = static_cast<int>(z2);
      }
    }

  rep.fitted_b =
      k.values.rowwise().sum().maxCoeff() / std::pow(k.R, params.D);

  if (rep.trivial_max_ratio > 1 + 1e-9)
    throw numerical_failure_error(
        "verify_convolution: near-branch ratio " +
        std::to_string(rep.trivial_max_ratio) + " exceeds 1");
  if (rep.algebraic_asserted && rep.algebraic_max_ratio > 1 + 1e-9)
    throw numerical_failure_error(
        "verify_convolution: far-branch ratio " +
        std::to_string(rep.algebraic_max_ratio) +
        " exceeds 1 inside the asserted regime");
  return rep;
}

ReproducibilityReport verify_reproducibility(const Kernel& f, double R,
                                             int D) {
  if (f.kind != KernelKind::F)
    throw invalid_input_error("verify_reproducibility: expects an F kernel");
  if (!(R > 0) || D < 1)
    throw invalid_input_error("verify_reproducibility: bad R or D");
  const Eigen::Index n = f.values.rows();
  const double scale = std::pow(R, D);
  Eigen::MatrixXd f2 = f.values * f.values;
  ReproducibilityReport rep;
  double worst = -1;
  for (Eigen::Index z1 = 0; z1 < n; ++z1)
    for (Eigen::Index z3 = 0; z3 < n; ++z3) {
      const double ratio = f2(z1, z3) / (scale * f.values(z1, z3));
      if (ratio > worst) {
        worst = ratio;
        rep.z1 = static_cast<int>(z1);
        rep.z3 = static_cast<int>(z3);
      }
    }
  rep.fitted_g = worst;
  Eigen::Index z2best = 0;
  double best = -1;
  for (Eigen::Index z2 = 0; z2 < n; ++z2) {
    const double w = f.values(rep.z1, z2) * f.values(z2, rep.z3);
    if (w > best) {
      best = w;
      z2best = z2;
    }
  }
  rep.z2 = static_cast<int>(z2best);
  return rep;
}

double reference_g(double alpha, int D, double j0) {
  (void)j0;  // g is a property of F alone; j0 kept for interface symmetry
  std::vector<int> extents;
  if (D == 1)
    extents = {200};
  else if (D == 2)
    extents = {24, 24};
  else if (D == 3)
    extents = {10, 10, 10};
  else
    throw invalid_input_error("reference_g: D must be 1, 2, or 3");
  auto lat = build_lattice(extents, Metric::euclidean);
  const double R = 5.0;
  auto f = build_kernel(lat, KernelKind::F, R, 1.0, alpha);
  return verify_reproducibility(f, R, D).fitted_g;
}

double bound_short_range(const BoundParams& params, double r, double t) {
  if (!(r >= 0) || !(t >= 0))
    throw invalid_input_error("bound_short_range: r and t must be >= 0");
  return 2 * std::exp(params.v * t - r / params.chi);
}

double bound_hastings_koma(const BoundParams& params, double r, double t) {
  if (!(r >= 1))
    throw invalid_input_error("bound_hastings_koma: r must be >= 1");
  if (!(t >= 0)) throw invalid_input_error("bound_hastings_koma: t must be >= 0");
  return std::exp(params.v * t - params.alpha * std::log(r));
}

PaperBound bound_paper(const BoundParams& params, double r, double t,
                       double chi) {
  if (!(r > 0)) throw invalid_input_error("bound_paper: r must be positive");
  if (!(t >= 0)) throw invalid_input_error("bound_paper: t must be >= 0");
  if (std::abs(chi - params.chi) > 1e-9 * params.chi ||
      std::abs(t - params.t) > 1e-9 * std::max(1.0, params.t))
    throw invalid_input_error("bound_paper: params built at a different (chi, t)");
  PaperBound out;
  out.log_term1 =
      std::log(2 * params.c * params.kappa) + params.v * t - r / chi;
  out.log_term2 =
      params.R == 0
          ? -std::numeric_limits<double>::infinity()
          : std::log(4 * params.c * params.effective_kappa_sq) +
                params.v_chi * t + params.alpha * (std::log(params.R) -
                                                   std::log(r));
  out.log_value = logsumexp2(out.log_term1, out.log_term2);
  out.value = std::exp(out.log_value);
  out.flags.r_gt_6R = r > 6 * params.R;
  out.flags.vt_gt_alpha_log_alpha =
      params.v * t > params.alpha * std::log(params.alpha);
  return out;
}

double zeta_exponent(double alpha, int D) {
  if (!(alpha > 2 * D))
    throw unsupported_regime_error(
        "zeta_exponent: requires alpha > 2D, got alpha=" +
        std::to_string(alpha) + ", D=" + std::to_string(D));
  return 1.0 / (1.0 + (1.0 + D) / (alpha - 2.0 * D));
}

CutoffMode parse_cutoff_mode(const std::string& s) {
  const std::string u = lowercase(s);
  if (u == "scaling") return CutoffMode::scaling;
  if (u == "numeric") return CutoffMode::numeric;
  throw invalid_input_error("unknown cutoff mode '" + s + "'");
}

BoundVariant parse_bound_variant(const std::string& s) {
  const std::string u = lowercase(s);
  if (u == "short_range") return BoundVariant::short_range;
  if (u == "hastings_koma") return BoundVariant::hastings_koma;
  if (u == "paper_fixed_chi") return BoundVariant::paper_fixed_chi;
  if (u == "paper_optimized") return BoundVariant::paper_optimized;
  throw invalid_input_error("unknown bound variant '" + s + "'");
}

std::string bound_variant_name(BoundVariant v) {
  switch (v) {
    case BoundVariant::short_range: return "short_range";
    case BoundVariant::hastings_koma: return "hastings_koma";
    case BoundVariant::paper_fixed_chi: return "paper_fixed_chi";
    case BoundVariant::paper_optimized: return "paper_optimized";
  }
  throw invalid_input_error("bound_variant_name: bad enum value");
}

BoundModel::BoundModel(std::shared_ptr<const CouplingLaw> law, double g)
    : law_(std::move(law)), g_(g) {
  if (!law_) throw invalid_input_error("bound model: null coupling law");
  if (!(g_ > 0)) throw invalid_input_error("bound model: g must be positive");
  if (law_->alpha() > 2 * law_->dimension()) {
    // v_chi at t = 1 falls off with chi once alpha > 2D; pick chi0 where it
    // crosses 1 so the scaling trajectory keeps v_chi * t of order one.
    auto vchi1 = [&](double chi) { return params_at(chi, 1.0).v_chi; };
    if (vchi1(1.0) <= 1.0) {
      chi0_ = 1.0;
    } else {
      double lo = 1.0, hi = 2.0;
      while (vchi1(hi) > 1.0) {
        lo = hi;
        hi *= 2;
        if (hi > 1e15)
          throw numerical_failure_error(
              "bound model: v_chi never fell below 1");
      }
      for (int it = 0; it < 200 && hi - lo > 1e-9 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (vchi1(mid) > 1.0 ? lo : hi) = mid;
      }
      chi0_ = 0.5 * (lo + hi);
    }
  }
}

BoundParams BoundModel::params_at(double chi, double t) const {
  return make_bound_params(*law_, chi, t, g_);
}

PaperBound BoundModel::bound_at(double r, double t, double chi) const {
  return bound_paper(params_at(chi, t), r, t, chi);
}

double BoundModel::gamma_exponent() const {
  const double alpha = law_->alpha();
  const int D = law_->dimension();
  if (!(alpha > 2 * D))
    throw unsupported_regime_error(
        "gamma exponent: requires alpha > 2D");
  return (1.0 + D) / (alpha - 2.0 * D);
}

double BoundModel::scaling_chi0() const {
  if (chi0_ < 0)
    throw unsupported_regime_error(
        "scaling cutoff: requires alpha > 2D");
  return chi0_;
}

double BoundModel::scaling_chi(double t) const {
  if (!(t >= 0)) throw invalid_input_error("scaling_chi: t must be >= 0");
  return std::max(1.0, scaling_chi0() * std::pow(t, gamma_exponent()));
}

CutoffResult BoundModel::optimize_cutoff(double r, double t,
                                         CutoffMode mode) const {
  if (!(r > 0)) throw invalid_input_error("optimize_cutoff: r must be positive");
  if (!(t >= 0)) throw invalid_input_error("optimize_cutoff: t must be >= 0");

  auto finish = [&](double chi) {
    PaperBound pb = bound_at(r, t, chi);
    CutoffResult res;
    res.chi_star = chi;
    res.raw_value = pb.value;
    res.log_raw_value = pb.log_value;
    res.bound_value = std::min(2.0, pb.value);
    res.flags = pb.flags;
    return res;
  };

  if (mode == CutoffMode::scaling) return finish(scaling_chi(t));

  // Upper end of the search domain: the largest chi keeping r > 6R, found as
  // the fixed point of 6 chi v(chi) t = r since v itself grows with chi.
  double chi_hi = 1.0;
  if (t > 0 && 6 * params_at(1.0, t).v * t < r) {
    double lo = 1.0, hi = 2.0;
    auto sixR = [&](double chi) { return 6 * chi * params_at(chi, t).v * t; };
    while (sixR(hi) < r) {
      lo = hi;
      hi *= 2;
      if (hi > 1e15) break;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-9 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (sixR(mid) < r ? lo : hi) = mid;
    }
    chi_hi = std::max(1.0, 0.5 * (lo + hi));
  }

  auto objective = [&](double chi) { return bound_at(r, t, chi).log_value; };

  double best_chi = 1.0;
  double best_val = objective(1.0);
  auto consider = [&](double chi) {
    if (!(chi >= 1)) return;
    const double val = objective(chi);
    if (val < best_val) {
      best_val = val;
      best_chi = chi;
    }
  };
  consider(chi_hi);
  if (chi0_ >= 0) consider(scaling_chi(t));

  if (chi_hi > 1.0) {
    // Coarse log-spaced scan guards against the sawtooth the integer shells
    // put into lambda(chi); golden-section then refines the best bracket.
    constexpr int kScan = 64;
    std::vector<double> grid(kScan + 1);
    double scan_best = objective(1.0);
    int scan_idx = 0;
    for (int q = 0; q <= kScan; ++q) {
      grid[q] = std::exp(std::log(chi_hi) * q / kScan);
      const double val = objective(grid[q]);
      if (val < scan_best) {
        scan_best = val;
        scan_idx = q;
      }
    }
    double a = grid[std::max(0, scan_idx - 1)];
    double b = grid[std::min(kScan, scan_idx + 1)];
    const double gr = (std::sqrt(5.0) - 1) / 2;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    for (int it = 0; it < 300 && b - a > 1e-6; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = objective(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = objective(x2);
      }
    }
    consider(0.5 * (a + b));
  }
  return finish(best_chi);
}

BoundCurve evaluate_bound_curve(const BoundModel& model,
                                const BoundGridRequest& request) {
  if (request.rs.empty() || request.ts.empty())
    throw invalid_input_error("bound curve: empty grid");
  for (double r : request.rs)
    if (!(r > 0)) throw invalid_input_error("bound curve: r must be positive");
  for (double t : request.ts)
    if (!(t >= 0)) throw invalid_input_error("bound curve: t must be >= 0");
  if (request.variant != BoundVariant::paper_optimized && !(request.chi >= 1))
    throw invalid_input_error("bound curve: chi must be >= 1");

  const Eigen::Index nr = static_cast<Eigen::Index>(request.rs.size());
  const Eigen::Index nt = static_cast<Eigen::Index>(request.ts.size());
  BoundCurve curve;
  curve.variant = request.variant;
  curve.rs = request.rs;
  curve.ts = request.ts;
  curve.values.resize(nr, nt);
  curve.raw.resize(nr, nt);
  curve.raw_log.resize(nr, nt);
  curve.chi_star.resize(nr, nt);
  curve.in_regime_r.resize(nr, nt);
  curve.in_regime_vt.resize(nr, nt);

  auto fill_cell = [&](Eigen::Index ir, Eigen::Index it) {
    const double r = request.rs[static_cast<std::size_t>(ir)];
    const double t = request.ts[static_cast<std::size_t>(it)];
    double raw_log = 0, chi_used = request.chi;
    RegimeFlags flags;
    switch (request.variant) {
      case BoundVariant::short_range: {
        BoundParams p = model.params_at(request.chi, t);
        raw_log = std::log(2.0) + p.v * t - r / p.chi;
        flags.r_gt_6R = r > 6 * p.R;
        flags.vt_gt_alpha_log_alpha = p.v * t > p.alpha * std::log(p.alpha);
        break;
      }
      case BoundVariant::hastings_koma: {
        BoundParams p = model.params_at(request.chi, t);
        if (!(r >= 1))
          throw invalid_input_error("bound curve: hastings_koma needs r >= 1");
        raw_log = p.v * t - p.alpha * std::log(r);
        flags.r_gt_6R = r > 6 * p.R;
        flags.vt_gt_alpha_log_alpha = p.v * t > p.alpha * std::log(p.alpha);
        break;
      }
      case BoundVariant::paper_fixed_chi: {
        PaperBound pb = model.bound_at(r, t, request.chi);
        raw_log = pb.log_value;
        flags = pb.flags;
        break;
      }
      case BoundVariant::paper_optimized: {
        CutoffResult res = model.optimize_cutoff(r, t, request.mode);
        raw_log = res.log_raw_value;
        chi_used = res.chi_star;
        flags = res.flags;
        break;
      }
    }
    curve.raw_log(ir, it) = raw_log;
    curve.raw(ir, it) = std::exp(raw_log);
    curve.values(ir, it) = std::min(2.0, curve.raw(ir, it));
    curve.chi_star(ir, it) = chi_used;
    curve.in_regime_r(ir, it) = flags.r_gt_6R ? 1 : 0;
    curve.in_regime_vt(ir, it) = flags.vt_gt_alpha_log_alpha ? 1 : 0;
  };

  const Eigen::Index cells = nr * nt;
  const int nw = std::max(1, std::min<int>(request.workers,
                                           static_cast<int>(cells)));
  if (nw == 1) {
    for (Eigen::Index idx = 0; idx < cells; ++idx)
      fill_cell(idx / nt, idx % nt);
  } else {
    std::atomic<Eigen::Index> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto task = [&]() {
      try {
        for (Eigen::Index idx; (idx = next.fetch_add(1)) < cells;)
          fill_cell(idx / nt, idx % nt);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(task);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  curve.params = model.params_at(curve.chi_star(nr - 1, nt - 1),
                                 request.ts.back());
  return curve;
}

}  // namespace lightcone
