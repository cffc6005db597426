#include "lightcone/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "lightcone/linalg.hpp"

namespace lightcone {

using cplx = std::complex<double>;

EvolveMethod parse_evolve_method(const std::string& s) {
  std::string u;
  for (char c : s) u.push_back(std::tolower(static_cast<unsigned char>(c)));
  if (u == "dense_expm" || u == "dense") return EvolveMethod::dense_expm;
  if (u == "krylov") return EvolveMethod::krylov;
  throw invalid_input_error("unknown evolve method '" + s + "'");
}

HeisenbergPropagator::HeisenbergPropagator(const DenseOperator& h,
                                           EvolveMethod method,
                                           int krylov_max_subspace)
    : method_(method),
      dim_(h.matrix.rows()),
      n_sites_(h.n_sites),
      krylov_max_subspace_(krylov_max_subspace) {
  if (h.matrix.rows() != h.matrix.cols())
    throw invalid_input_error("propagator: H must be square");
  if (!linalg::is_hermitian(h.matrix))
    throw invalid_input_error("propagator: H must be Hermitian");
  if (method_ == EvolveMethod::dense_expm) {
    auto [w, v] = linalg::hermitian_eigensystem(h.matrix);
    evals_ = std::move(w);
    evecs_ = std::move(v);
  } else {
    h_ = h.matrix;
  }
}

namespace {

// exp(-i t T_m) e_1 for the real symmetric tridiagonal Lanczos matrix.
Eigen::VectorXcd tridiag_expm_e1(const Eigen::VectorXd& alpha,
                                 const Eigen::VectorXd& beta, int m, double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(alpha.head(m), beta.head(std::max(0, m - 1)));
  const Eigen::MatrixXd& q = es.eigenvectors();
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(m);
  for (int k = 0; k < m; ++k) {
    cplx ph = std::exp(cplx(0, -t * es.eigenvalues()(k)));
    y += ph * q(0, k) * q.col(k).cast<cplx>();
  }
  return y;
}

// One column of e^{-iHt} by Lanczos with full reorthogonalization.
Eigen::VectorXcd lanczos_expm_column(const Eigen::MatrixXcd& h,
                                     Eigen::Index col, double t, double tol,
                                     int max_m) {
  const Eigen::Index dim = h.rows();
  const int cap = static_cast<int>(std::min<Eigen::Index>(max_m, dim));
  Eigen::MatrixXcd v(dim, cap);
  Eigen::VectorXd alpha(cap), beta(cap);
  v.col(0) = Eigen::VectorXcd::Zero(dim);
  v.col(0)(col) = 1.0;

  int m = 0;
  bool breakdown = false;
  double err = std::numeric_limits<double>::infinity();
  while (m < cap) {
    Eigen::VectorXcd w = h * v.col(m);
    alpha(m) = std::real(v.col(m).dot(w));
    w -= alpha(m) * v.col(m);
    if (m > 0) w -= beta(m - 1) * v.col(m - 1);
    // Full reorthogonalization, twice; Lanczos loses orthogonality otherwise.
    for (int pass = 0; pass < 2; ++pass)
      w -= v.leftCols(m + 1) * (v.leftCols(m + 1).adjoint() * w);
    beta(m) = w.norm();
    ++m;
    if (beta(m - 1) < 1e-14) {
      breakdown = true;  // invariant subspace: result exact
      break;
    }
    if (m < cap) v.col(m) = w / beta(m - 1);
    // A posteriori residual estimate: weight that would leak to basis m+1.
    if (m >= 2 && m % 4 == 0) {
      Eigen::VectorXcd y = tridiag_expm_e1(alpha, beta, m, t);
      err = beta(m - 1) * std::abs(y(m - 1));
      if (err < tol) break;
    }
  }
  Eigen::VectorXcd y = tridiag_expm_e1(alpha, beta, m, t);
  err = breakdown || m == dim ? 0.0 : beta(m - 1) * std::abs(y(m - 1));
  if (err >= tol)
    throw numerical_failure_error(
        "krylov: column " + std::to_string(col) + " residual " +
        std::to_string(err) + " above tolerance after m=" + std::to_string(m) +
        " (raise the subspace cap)");
  return v.leftCols(m) * y;
}

}  // namespace

Eigen::MatrixXcd HeisenbergPropagator::unitary(double t) const {
  if (method_ == EvolveMethod::dense_expm) {
    Eigen::VectorXcd ph(dim_);
    for (Eigen::Index k = 0; k < dim_; ++k)
      ph(k) = std::exp(cplx(0, -evals_(k) * t));
    return evecs_ * ph.asDiagonal() * evecs_.adjoint();
  }
  Eigen::MatrixXcd u(dim_, dim_);
  for (Eigen::Index c = 0; c < dim_; ++c)
    u.col(c) = lanczos_expm_column(h_, c, t, 1e-10, krylov_max_subspace_);
  return u;
}

DenseOperator HeisenbergPropagator::evolve(const DenseOperator& a,
                                           double t) const {
  if (a.matrix.rows() != dim_ || a.matrix.cols() != dim_)
    throw invalid_input_error("evolve: dimension mismatch");
  DenseOperator out;
  out.n_sites = n_sites_;
  out.support.resize(n_sites_);
  for (int s = 0; s < n_sites_; ++s) out.support[s] = s;
  if (method_ == EvolveMethod::dense_expm) {
    // In the eigenbasis the conjugation is an elementwise phase.
    Eigen::MatrixXcd p = evecs_.adjoint() * a.matrix * evecs_;
    for (Eigen::Index jj = 0; jj < dim_; ++jj)
      for (Eigen::Index ii = 0; ii < dim_; ++ii)
        p(ii, jj) *= std::exp(cplx(0, (evals_(ii) - evals_(jj)) * t));
    out.matrix = evecs_ * p * evecs_.adjoint();
  } else {
    Eigen::MatrixXcd w = unitary(t);
    out.matrix = w.adjoint() * a.matrix * w;
  }
  return out;
}

DenseOperator heisenberg_evolve(const DenseOperator& h, const DenseOperator& a,
                                double t, EvolveMethod method) {
  return HeisenbergPropagator(h, method).evolve(a, t);
}

namespace {

// Dense x site-Pauli products in O(dim^2) via the permutation/phase action of
// the Pauli on basis states.
struct SiteAction {
  std::vector<int> img;
  std::vector<cplx> ph;
};

SiteAction site_action(PauliKind k, int site, int n) {
  const int p = n - 1 - site;
  const int dim = 1 << n;
  SiteAction sa;
  sa.img.resize(dim);
  sa.ph.assign(dim, 1.0);
  for (int c = 0; c < dim; ++c) {
    const int bit = (c >> p) & 1;
    switch (k) {
      case PauliKind::X:
        sa.img[c] = c ^ (1 << p);
        break;
      case PauliKind::Y:
        sa.img[c] = c ^ (1 << p);
        sa.ph[c] = bit ? cplx(0, -1) : cplx(0, 1);
        break;
      case PauliKind::Z:
        sa.img[c] = c;
        if (bit) sa.ph[c] = -1.0;
        break;
    }
  }
  return sa;
}

// i [M, B] for a single-site B; Hermitian whenever M is.
Eigen::MatrixXcd i_commutator_site(const Eigen::MatrixXcd& m,
                                   const SiteAction& b) {
  const Eigen::Index dim = m.rows();
  Eigen::MatrixXcd out(dim, dim);
  const cplx iu(0, 1);
  // (M B).col(c) = ph[c] * M.col(img[c]); (B M).row(r) = ph[img[r]] * M.row(img[r]).
  for (Eigen::Index c = 0; c < dim; ++c)
    out.col(c) = (iu * b.ph[c]) * m.col(b.img[c]);
  for (Eigen::Index r = 0; r < dim; ++r)
    out.row(r) -= (iu * b.ph[b.img[r]]) * m.row(b.img[r]);
  return out;
}

}  // namespace

CommutatorProfile commutator_profile(const SpinModel& model, PauliKind a_kind,
                                     int i, PauliKind b_kind,
                                     const std::vector<int>& probes,
                                     const std::vector<double>& times,
                                     EvolveMethod method, int workers) {
  if (times.empty() || times.front() < 0 ||
      !std::is_sorted(times.begin(), times.end()))
    throw invalid_input_error("commutator_profile: times must be ascending, >= 0");
  const int n = model.n_sites;
  if (i < 0 || i >= n)
    throw invalid_input_error("commutator_profile: source site out of range");
  for (int j : probes)
    if (j < 0 || j >= n)
      throw invalid_input_error("commutator_profile: probe site out of range");

  DenseOperator h = assemble_matrix(model);
  HeisenbergPropagator prop(h, method);
  DenseOperator a = site_operator(model.lattice, i, a_kind);

  CommutatorProfile profile;
  profile.source_site = i;
  profile.probe_sites = probes;
  profile.probe_distances.reserve(probes.size());
  for (int j : probes)
    profile.probe_distances.push_back(distance(model.lattice, i, j));
  profile.times = times;
  profile.values.resize(static_cast<Eigen::Index>(probes.size()),
                        static_cast<Eigen::Index>(times.size()));

  std::vector<SiteAction> actions;
  actions.reserve(probes.size());
  for (int j : probes) actions.push_back(site_action(b_kind, j, n));

  // One task per time: grid cells are disjoint, output independent of the
  // worker count.
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto task = [&]() {
    try {
      for (std::size_t k; (k = next.fetch_add(1)) < times.size();) {
        DenseOperator at = prop.evolve(a, times[k]);
        for (std::size_t pj = 0; pj < probes.size(); ++pj) {
          Eigen::MatrixXcd c = i_commutator_site(at.matrix, actions[pj]);
          profile.values(static_cast<Eigen::Index>(pj),
                         static_cast<Eigen::Index>(k)) =
              linalg::hermitian_eigenvalues(c).cwiseAbs().maxCoeff();
        }
      }
    } catch (...) {
      std::scoped_lock lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };
  const int nw = std::max(1, std::min<int>(workers, static_cast<int>(times.size())));
  if (nw == 1) {
    task();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(task);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return profile;
}

DenseOperator haar_twirl(const DenseOperator& a,
                         const std::vector<int>& complement) {
  const int n = a.n_sites;
  std::vector<int> comp = complement;
  std::sort(comp.begin(), comp.end());
  comp.erase(std::unique(comp.begin(), comp.end()), comp.end());
  for (int s : comp)
    if (s < 0 || s >= n)
      throw invalid_input_error("haar_twirl: complement site out of range");
  if (comp.empty()) return a;

  std::vector<int> keep;
  for (int s = 0; s < n; ++s)
    if (!std::binary_search(comp.begin(), comp.end(), s)) keep.push_back(s);

  const int nk = static_cast<int>(keep.size());
  const int nc = static_cast<int>(comp.size());
  const Eigen::Index dk = Eigen::Index(1) << nk;
  const Eigen::Index dc = Eigen::Index(1) << nc;

  // Enumerate full-register indices by (kept bits, complement bits).
  std::vector<Eigen::Index> kidx(dk, 0), cidx(dc, 0);
  for (Eigen::Index kk = 0; kk < dk; ++kk)
    for (int q = 0; q < nk; ++q)
      if ((kk >> q) & 1) kidx[kk] |= Eigen::Index(1) << (n - 1 - keep[q]);
  for (Eigen::Index cc = 0; cc < dc; ++cc)
    for (int q = 0; q < nc; ++q)
      if ((cc >> q) & 1) cidx[cc] |= Eigen::Index(1) << (n - 1 - comp[q]);

  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(dk, dk);
  for (Eigen::Index kr = 0; kr < dk; ++kr)
    for (Eigen::Index kc = 0; kc < dk; ++kc) {
      cplx s = 0;
      for (Eigen::Index cc = 0; cc < dc; ++cc)
        s += a.matrix(kidx[kr] | cidx[cc], kidx[kc] | cidx[cc]);
      b(kr, kc) = s / static_cast<double>(dc);
    }

  DenseOperator out;
  out.n_sites = n;
  out.matrix = Eigen::MatrixXcd::Zero(a.matrix.rows(), a.matrix.cols());
  for (Eigen::Index kr = 0; kr < dk; ++kr)
    for (Eigen::Index kc = 0; kc < dk; ++kc) {
      const cplx val = b(kr, kc);
      for (Eigen::Index cc = 0; cc < dc; ++cc)
        out.matrix(kidx[kr] | cidx[cc], kidx[kc] | cidx[cc]) = val;
    }
  // Best-known support shrinks to the kept register.
  if (a.support.empty()) {
    out.support = keep;
  } else {
    for (int s : a.support)
      if (!std::binary_search(comp.begin(), comp.end(), s))
        out.support.push_back(s);
  }
  return out;
}

DenseOperator restrict_to_sites(const DenseOperator& op,
                                const std::vector<int>& sites) {
  const int n = op.n_sites;
  for (int s : sites)
    if (s < 0 || s >= n)
      throw invalid_input_error("restrict_to_sites: site out of range");
  {
    std::vector<int> u = sites;
    std::sort(u.begin(), u.end());
    if (std::adjacent_find(u.begin(), u.end()) != u.end())
      throw invalid_input_error("restrict_to_sites: duplicate site");
  }
  const int nk = static_cast<int>(sites.size());
  const Eigen::Index dk = Eigen::Index(1) << nk;
  std::vector<Eigen::Index> kidx(dk, 0);
  for (Eigen::Index kk = 0; kk < dk; ++kk)
    for (int q = 0; q < nk; ++q)
      if ((kk >> q) & 1) kidx[kk] |= Eigen::Index(1) << (n - 1 - sites[q]);
  DenseOperator out;
  out.n_sites = nk;
  out.support.resize(nk);
  for (int q = 0; q < nk; ++q) out.support[q] = q;
  out.matrix.resize(dk, dk);
  for (Eigen::Index r = 0; r < dk; ++r)
    for (Eigen::Index c = 0; c < dk; ++c)
      out.matrix(r, c) = op.matrix(kidx[r], kidx[c]);
  return out;
}

QuasiLocalDecomposition quasilocal_decompose(const LatticeSpec& lat,
                                             const HeisenbergPropagator& prop,
                                             const DenseOperator& a, int center,
                                             double t, double chi, double v,
                                             int lmax) {
  const int n = lat.n_sites();
  if (center < 0 || center >= n)
    throw invalid_input_error("quasilocal_decompose: center out of range");
  if (!(t >= 0) || !(chi > 0) || !(v >= 0) || lmax < 0)
    throw invalid_input_error("quasilocal_decompose: bad t/chi/v/lmax");
  if (a.n_sites != n || prop.dim() != a.matrix.rows())
    throw invalid_input_error("quasilocal_decompose: dimension mismatch");

  QuasiLocalDecomposition qd;
  qd.center = center;
  qd.chi = chi;
  qd.v = v;
  qd.t = t;
  qd.radius0 = chi * v * t;

  DenseOperator at = prop.evolve(a, t);

  for (int l = 0; l <= lmax; ++l) {
    const double radius = qd.radius0 + l * chi;
    std::vector<int> ball, comp;
    for (int z = 0; z < n; ++z)
      (distance(lat, center, z) <= radius ? ball : comp).push_back(z);
    qd.radius_schedule.push_back(radius);
    qd.balls.push_back(ball);
    if (comp.empty()) {
      qd.projected.push_back(at);
      qd.distance_norms.push_back(0.0);
      qd.truncated = l < lmax;
      break;
    }
    qd.projected.push_back(haar_twirl(at, comp));
    qd.distance_norms.push_back(
        operator_norm(Eigen::MatrixXcd(qd.projected.back().matrix - at.matrix)));
  }

  for (std::size_t l = 0; l < qd.projected.size(); ++l) {
    DenseOperator delta;
    delta.n_sites = n;
    delta.support = qd.balls[l];
    delta.matrix = l == 0 ? qd.projected[0].matrix
                          : (qd.projected[l].matrix - qd.projected[l - 1].matrix);
    // The delta lives on ball l; the norm of M ox I is the norm of M.
    qd.delta_norms.push_back(
        operator_norm(restrict_to_sites(delta, qd.balls[l]).matrix));
    qd.deltas.push_back(std::move(delta));
  }
  return qd;
}

QuasiLocalDecomposition quasilocal_decompose(const LatticeSpec& lat,
                                             const DenseOperator& h_sr,
                                             const DenseOperator& a, int center,
                                             double t, double chi, double v,
                                             int lmax) {
  HeisenbergPropagator prop(h_sr, EvolveMethod::dense_expm);
  return quasilocal_decompose(lat, prop, a, center, t, chi, v, lmax);
}

}  // namespace lightcone
