#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lightcone/errors.hpp"
#include "lightcone/lattice.hpp"

namespace lightcone {

// Coupling strength sums as functions of the cutoff, abstracted so the bound
// evaluator runs both on explicit lattices and on the infinite chain, where
// the front sits at distances far beyond any storable matrix.
struct CouplingLaw {
  virtual ~CouplingLaw() = default;
  virtual int dimension() const = 0;
  virtual double alpha() const = 0;
  virtual double j0() const = 0;
  // max over sites of the summed coupling to partners at distance <= chi
  virtual double lambda_sr(double chi) const = 0;
  // max over sites of the summed coupling to partners at distance > chi
  virtual double lambda_chi(double chi) const = 0;
};

// Row sums read off a concrete lattice. Distances and couplings are cached
// once; each lambda evaluation is a masked row sum.
class LatticeCouplingLaw final : public CouplingLaw {
 public:
  LatticeCouplingLaw(const LatticeSpec& lattice, double alpha, double j0);
  int dimension() const override { return lattice_.dimension; }
  double alpha() const override { return alpha_; }
  double j0() const override { return j0_; }
  double lambda_sr(double chi) const override;
  double lambda_chi(double chi) const override;
  const LatticeSpec& lattice() const { return lattice_; }

 private:
  LatticeSpec lattice_;
  double alpha_, j0_;
  Eigen::MatrixXd coupling_, dist_;
};

// Interior site of an unbounded chain with couplings j0/d^alpha in both
// directions. Tail sums use Euler-Maclaurin corrections after an explicit
// head, accurate to ~1e-14 for alpha >= 1.5.
class InfiniteChainLaw final : public CouplingLaw {
 public:
  InfiniteChainLaw(double alpha, double j0);  // requires alpha > 1
  int dimension() const override { return 1; }
  double alpha() const override { return alpha_; }
  double j0() const override { return j0_; }
  double lambda_sr(double chi) const override;
  double lambda_chi(double chi) const override;

 private:
  double alpha_, j0_;
};

// Frozen snapshot of every constant entering the bounds at one (chi, t).
struct BoundParams {
  double alpha = 0;
  int D = 0;
  double j0 = 0;
  double chi = 1;
  double t = 0;
  double lambda_sr = 0;
  double lambda_chi = 0;
  double v = 0;        // 4 e lambda_sr
  double R = 0;        // chi * v * t
  double c = 0;        // 2 (1 + e)
  double kappa = 0;    // e / (e - 1)
  double g = 0;        // fitted reproducibility constant
  double b = 0;        // fitted half-space constant, 0 until fitted
  double vartheta = 0;  // g * 4 kappa^3 c^2
  double v_chi = 0;     // vartheta * R^D * lambda_chi
  // The algebraic tail of the final bound carries a flattened-kernel factor
  // 2 * 6^alpha that the compact formula hides inside kappa^2; it is kept
  // explicit here so every prefactor stays traceable.
  double effective_kappa_sq = 0;  // 2 * 6^alpha * kappa^2
};

BoundParams make_bound_params(const CouplingLaw& law, double chi, double t,
                              double g, double b = 0.0);

enum class KernelKind { K, F, Jlr };

// Site-by-site kernel matrix together with the scales it was built at.
struct Kernel {
  KernelKind kind = KernelKind::K;
  LatticeSpec lattice;
  Eigen::MatrixXd values;
  double R = 0, chi = 1, alpha = 0;
};

// K flattens to 1 within 2R and decays exponentially with scale 2*chi beyond;
// F flattens within 6R and decays algebraically as (6R/d)^alpha beyond.
Kernel build_kernel(const LatticeSpec& lattice, KernelKind kind, double R,
                    double chi, double alpha);

// Long-range coupling matrix with every diagonal entry replaced by
// kappa * lambda_chi, the form the series bound iterates.
Kernel jlr_matrix_with_diagonal(const CouplingSplit& split, double kappa);

// kappa^2 (2 kappa^2 c^2)^a [K (Jlr K)^a]_{ij}, evaluated by repeated
// matrix-vector products from the i-th unit vector.
double j_a_series(const Kernel& k, const Kernel& jlr, int a, int i, int j,
                  const BoundParams& params, int a_cap = 12);

struct ConvolutionReport {
  double max_ratio = 0;  // max over pairs of G / (2 kappa lambda_chi F)
  int argmax_z1 = -1, argmax_z2 = -1;
  double trivial_max_ratio = 0;    // pairs with d <= 6R
  double algebraic_max_ratio = 0;  // pairs with d > 6R
  double fitted_b = 0;             // max_z of sum_y K(z,y) / R^D
  bool degenerate = false;         // lambda_chi == 0, ratios defined as 0
  bool algebraic_asserted = false;  // vt > alpha log alpha held
};

// Checks G(z1,z2) = sum_y K(z1,y) Jlr(y,z2) <= 2 kappa lambda_chi F(z1,z2)
// over every pair. The near branch (d <= 6R) must hold unconditionally; the
// far branch is enforced only when vt > alpha log alpha and otherwise just
// reported. Violations in an enforced branch raise numerical-failure.
ConvolutionReport verify_convolution(const Kernel& k, const Kernel& jlr,
                                     const Kernel& f,
                                     const BoundParams& params);

struct ReproducibilityReport {
  double fitted_g = 0;  // max over (z1,z3) of (F F)(z1,z3) / (R^D F(z1,z3))
  int z1 = -1, z2 = -1, z3 = -1;  // worst triple, z2 the heaviest midpoint
};

ReproducibilityReport verify_reproducibility(const Kernel& f, double R, int D);

// g fitted on a fixed reference geometry (a 200-site chain for D=1) at R = 5.
double reference_g(double alpha, int D, double j0 = 1.0);

// 2 e^{vt - r/chi}: the finite-range envelope for unit-norm observables.
double bound_short_range(const BoundParams& params, double r, double t);

// e^{vt} / r^alpha with unit prefactor by convention; r >= 1 required so the
// power law stays a decay.
double bound_hastings_koma(const BoundParams& params, double r, double t);

struct RegimeFlags {
  bool r_gt_6R = false;
  bool vt_gt_alpha_log_alpha = false;
};

struct PaperBound {
  double value = 0;      // may overflow to inf deep inside the cone
  double log_value = 0;  // always finite for r > 0
  double log_term1 = 0;  // exponential piece log(2 c kappa) + vt - r/chi
  double log_term2 = 0;  // algebraic piece, -inf when R = 0 or lambda_chi-free
  RegimeFlags flags;
};

// 2 c kappa e^{vt - r/chi} + 4 c (2 6^alpha kappa^2) e^{v_chi t} (R/r)^alpha,
// evaluated in log space. params must have been built at the same (chi, t).
// Flags report whether the derivation regime held; values are returned
// regardless.
PaperBound bound_paper(const BoundParams& params, double r, double t,
                       double chi);

// 1 / (1 + (1+D)/(alpha - 2D)); the light-cone exponent. alpha <= 2D is
// outside the supported regime.
double zeta_exponent(double alpha, int D);

enum class CutoffMode { scaling, numeric };
CutoffMode parse_cutoff_mode(const std::string& s);

struct CutoffResult {
  double chi_star = 1;
  double bound_value = 0;      // clipped at the trivial ceiling 2
  double raw_value = 0;        // unclipped, may be inf
  double log_raw_value = 0;
  RegimeFlags flags;
};

// Bound evaluation with the cutoff chosen per point. Scaling mode uses
// chi(t) = max(1, chi0 t^gamma) with gamma = (1+D)/(alpha-2D) and chi0 solving
// v_chi = 1 at t = 1; numeric mode minimizes over chi in [1, chi_hi] where
// chi_hi keeps r > 6R satisfiable, always also trying the scaling candidate.
class BoundModel {
 public:
  BoundModel(std::shared_ptr<const CouplingLaw> law, double g);
  const CouplingLaw& law() const { return *law_; }
  double g() const { return g_; }
  BoundParams params_at(double chi, double t) const;
  PaperBound bound_at(double r, double t, double chi) const;
  double gamma_exponent() const;  // (1+D)/(alpha-2D)
  double scaling_chi0() const;
  double scaling_chi(double t) const;
  CutoffResult optimize_cutoff(double r, double t, CutoffMode mode) const;

 private:
  std::shared_ptr<const CouplingLaw> law_;
  double g_;
  double chi0_ = -1;  // < 0 when alpha <= 2D leaves scaling mode undefined
};

enum class BoundVariant {
  short_range,
  hastings_koma,
  paper_fixed_chi,
  paper_optimized
};
BoundVariant parse_bound_variant(const std::string& s);
std::string bound_variant_name(BoundVariant v);

struct BoundGridRequest {
  BoundVariant variant = BoundVariant::paper_optimized;
  std::vector<double> rs, ts;
  double chi = 1.0;                       // fixed-cutoff variants
  CutoffMode mode = CutoffMode::numeric;  // paper_optimized only
  int workers = 1;
};

// r-by-t surface of one bound variant. values are clipped at the trivial
// commutator ceiling 2; raw_log keeps the unclipped magnitude.
struct BoundCurve {
  BoundVariant variant = BoundVariant::paper_optimized;
  std::vector<double> rs, ts;
  Eigen::MatrixXd values;    // min(2, raw), rs.size() x ts.size()
  Eigen::MatrixXd raw;       // unclipped, may hold inf
  Eigen::MatrixXd raw_log;
  Eigen::MatrixXd chi_star;  // cutoff used at each point
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> in_regime_r;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> in_regime_vt;
  BoundParams params;  // snapshot at the last grid point's cutoff
};

BoundCurve evaluate_bound_curve(const BoundModel& model,
                                const BoundGridRequest& request);

}  // namespace lightcone
