#pragma once
#include <string>
#include <vector>

#include "lightcone/model.hpp"

namespace lightcone {

enum class EvolveMethod { dense_expm, krylov };

EvolveMethod parse_evolve_method(const std::string& s);

// Heisenberg conjugation engine. Both methods reuse work across calls: the
// dense path caches the eigensystem of H, the Krylov path rebuilds the unitary
// per distinct time via column-wise Lanczos (full reorthogonalization,
// adaptive subspace, residual tolerance 1e-10).
class HeisenbergPropagator {
 public:
  HeisenbergPropagator(const DenseOperator& h, EvolveMethod method,
                       int krylov_max_subspace = 400);

  // e^{iHt} A e^{-iHt}
  DenseOperator evolve(const DenseOperator& a, double t) const;

  // e^{-iHt}
  Eigen::MatrixXcd unitary(double t) const;

  Eigen::Index dim() const { return dim_; }

 private:
  EvolveMethod method_;
  Eigen::Index dim_ = 0;
  int n_sites_ = 0;
  int krylov_max_subspace_ = 400;
  Eigen::VectorXd evals_;    // dense_expm
  Eigen::MatrixXcd evecs_;   // dense_expm
  Eigen::MatrixXcd h_;       // krylov
};

DenseOperator heisenberg_evolve(const DenseOperator& h, const DenseOperator& a,
                                double t, EvolveMethod method);

struct ModelDescriptor {
  double alpha = 0, chi = 0, j0 = 0;
  std::string interaction;
  int n_sites = 0;
};

// C[j][t] = ||[A(t), B_j]|| for one source operator against a row of probes.
struct CommutatorProfile {
  int source_site = 0;
  std::vector<int> probe_sites;
  std::vector<double> probe_distances;  // d(source, probe), same order as probe_sites
  std::vector<double> times;
  Eigen::MatrixXd values;  // probe x time
  ModelDescriptor descriptor;
};

// times must be ascending and start at >= 0. Grid cells are independent; with
// workers > 1 they are evaluated by a pool and written to disjoint cells, so
// the result is identical at any worker count.
CommutatorProfile commutator_profile(const SpinModel& model, PauliKind a_kind,
                                     int i, PauliKind b_kind,
                                     const std::vector<int>& probes,
                                     const std::vector<double>& times,
                                     EvolveMethod method = EvolveMethod::dense_expm,
                                     int workers = 1);

// Exact Haar average over unitaries acting on `complement`:
// (partial trace over the complement)/2^|complement| tensored with identity.
DenseOperator haar_twirl(const DenseOperator& a,
                         const std::vector<int>& complement);

// A(t) filtered through a family of balls around `center` with radii R + l*chi,
// R = chi*v*t. projected[l] lives exactly on ball l; deltas telescope.
struct QuasiLocalDecomposition {
  int center = 0;
  double chi = 0, v = 0, t = 0, radius0 = 0;  // radius0 = R
  std::vector<double> radius_schedule;
  std::vector<std::vector<int>> balls;
  std::vector<DenseOperator> projected;  // A(l,t)
  std::vector<DenseOperator> deltas;     // A(0,t), then differences
  std::vector<double> delta_norms;
  std::vector<double> distance_norms;  // ||A(l,t) - A(t)||
  bool truncated = false;  // a ball swallowed the lattice before lmax
};

QuasiLocalDecomposition quasilocal_decompose(const LatticeSpec& lat,
                                             const DenseOperator& h_sr,
                                             const DenseOperator& a, int center,
                                             double t, double chi, double v,
                                             int lmax);

// Same, reusing a propagator already built from h_sr (the eigensolve is the
// expensive part at dim 4096).
QuasiLocalDecomposition quasilocal_decompose(const LatticeSpec& lat,
                                             const HeisenbergPropagator& prop,
                                             const DenseOperator& a, int center,
                                             double t, double chi, double v,
                                             int lmax);

// Restrict an operator known to act as M ox I (identity outside `sites`) to
// the tensor factor on `sites`.
DenseOperator restrict_to_sites(const DenseOperator& op,
                                const std::vector<int>& sites);

}  // namespace lightcone
