#include "lightcone/model.hpp"

#include <algorithm>
#include <cctype>
#include <random>

#include "lightcone/linalg.hpp"

namespace lightcone {

using cplx = std::complex<double>;

PauliKind parse_pauli_kind(const std::string& s) {
  if (s.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(s[0]))) {
      case 'X': return PauliKind::X;
      case 'Y': return PauliKind::Y;
      case 'Z': return PauliKind::Z;
    }
  }
  throw invalid_input_error("unknown operator kind '" + s + "'");
}

Interaction parse_interaction(const std::string& s) {
  std::string u;
  for (char c : s) u.push_back(std::toupper(static_cast<unsigned char>(c)));
  if (u == "XX") return Interaction::XX;
  if (u == "ZZ") return Interaction::ZZ;
  if (u == "XY") return Interaction::XY;
  throw invalid_input_error("unknown interaction '" + s + "'");
}

SpinModel build_model(const CouplingSplit& split, CouplingPart part,
                      Interaction interaction) {
  const Eigen::MatrixXd& m = part == CouplingPart::full ? split.full
                             : part == CouplingPart::short_range
                                 ? split.short_part
                                 : split.long_part;
  SpinModel model;
  model.lattice = split.lattice;
  model.n_sites = split.lattice.n_sites();
  for (int y = 0; y < model.n_sites; ++y)
    for (int z = y + 1; z < model.n_sites; ++z) {
      double j = m(y, z);
      if (j == 0) continue;
      switch (interaction) {
        case Interaction::XX:
          model.terms.push_back({PauliKind::X, y, z, j});
          break;
        case Interaction::ZZ:
          model.terms.push_back({PauliKind::Z, y, z, j});
          break;
        case Interaction::XY:
          model.terms.push_back({PauliKind::X, y, z, j / 2});
          model.terms.push_back({PauliKind::Y, y, z, j / 2});
          break;
      }
    }
  return model;
}

namespace {

// Apply one Pauli at bit position p to basis state c: returns the image state
// and multiplies phase. Site s of an n-site system lives at bit n-1-s, so
// site 0 is the leftmost tensor factor.
inline int apply_pauli_bit(PauliKind k, int p, int c, cplx& phase) {
  const int bit = (c >> p) & 1;
  switch (k) {
    case PauliKind::X:
      return c ^ (1 << p);
    case PauliKind::Y:
      phase *= bit ? cplx(0, -1) : cplx(0, 1);
      return c ^ (1 << p);
    case PauliKind::Z:
      if (bit) phase = -phase;
      return c;
  }
  return c;
}

}  // namespace

DenseOperator assemble_matrix(const SpinModel& model, int site_cap) {
  if (model.n_sites > site_cap)
    throw resource_limit_error("assemble_matrix: " +
                               std::to_string(model.n_sites) +
                               " sites exceeds cap " + std::to_string(site_cap));
  const int n = model.n_sites;
  const Eigen::Index dim = Eigen::Index(1) << n;
  DenseOperator op;
  op.n_sites = n;
  op.matrix = Eigen::MatrixXcd::Zero(dim, dim);
  std::vector<bool> touched(n, false);
  for (const auto& t : model.terms) {
    if (t.y == t.z || t.y < 0 || t.z < 0 || t.y >= n || t.z >= n)
      throw invalid_input_error("assemble_matrix: bad term sites");
    const int py = n - 1 - t.y, pz = n - 1 - t.z;
    for (Eigen::Index c = 0; c < dim; ++c) {
      cplx phase = t.coupling;
      int r = apply_pauli_bit(t.kind, py, static_cast<int>(c), phase);
      r = apply_pauli_bit(t.kind, pz, r, phase);
      op.matrix(r, c) += phase;
    }
    touched[t.y] = touched[t.z] = true;
  }
  for (int s = 0; s < n; ++s)
    if (touched[s]) op.support.push_back(s);
  return op;
}

DenseOperator site_operator(const LatticeSpec& lat, int site, PauliKind kind) {
  const int n = lat.n_sites();
  if (site < 0 || site >= n)
    throw invalid_input_error("site_operator: site out of range");
  if (n > 14)
    throw resource_limit_error("site_operator: lattice too large for dense form");
  const Eigen::Index dim = Eigen::Index(1) << n;
  DenseOperator op;
  op.n_sites = n;
  op.support = {site};
  op.matrix = Eigen::MatrixXcd::Zero(dim, dim);
  const int p = n - 1 - site;
  for (Eigen::Index c = 0; c < dim; ++c) {
    cplx phase = 1.0;
    int r = apply_pauli_bit(kind, p, static_cast<int>(c), phase);
    op.matrix(r, c) = phase;
  }
  return op;
}

double operator_norm(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols())
    throw invalid_input_error("operator_norm: matrix must be square");
  if (m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  if (linalg::is_hermitian(m))
    return linalg::hermitian_eigenvalues(m).cwiseAbs().maxCoeff();
  const cplx iunit(0, 1);
  if (linalg::is_hermitian(iunit * m))
    return linalg::hermitian_eigenvalues(iunit * m).cwiseAbs().maxCoeff();

  // General case: power iteration on O^dag O. Fixed seed keeps runs identical.
  const Eigen::Index dim = m.rows();
  std::mt19937 rng(0x6c1c0e5u);
  std::normal_distribution<double> gauss;
  Eigen::VectorXcd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = cplx(gauss(rng), gauss(rng));
  v.normalize();
  double prev = 0;
  int stable = 0;
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXcd w = m * v;
    double s2 = w.squaredNorm();  // Rayleigh quotient of O^dag O at unit v
    Eigen::VectorXcd u = m.adjoint() * w;
    double un = u.norm();
    if (un == 0) return 0.0;
    v = u / un;
    if (it > 0 && std::abs(s2 - prev) <= 1e-13 * std::max(s2, 1e-300)) {
      if (++stable >= 2) return std::sqrt(s2);
    } else {
      stable = 0;
    }
    prev = s2;
  }
  throw numerical_failure_error(
      "operator_norm: power iteration failed to converge");
}

double operator_norm(const DenseOperator& op) { return operator_norm(op.matrix); }

}  // namespace lightcone
