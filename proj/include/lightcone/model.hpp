#pragma once
#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "lightcone/lattice.hpp"

namespace lightcone {

enum class PauliKind { X, Y, Z };
enum class Interaction { XX, ZZ, XY };
enum class CouplingPart { full, short_range, long_range };

PauliKind parse_pauli_kind(const std::string& s);
Interaction parse_interaction(const std::string& s);

// One two-body product term: coupling * V_{y,kind} V_{z,kind}.
struct SpinTerm {
  PauliKind kind;
  int y = 0, z = 0;
  double coupling = 0;
};

struct SpinModel {
  LatticeSpec lattice;
  std::vector<SpinTerm> terms;
  int n_sites = 0;
};

// One term per unordered pair with nonzero coupling; the 1/2 double-counting
// factor is absorbed by enumerating each pair once. XX and ZZ put the whole
// pair coupling on a single Pauli kind. XY emits an X term and a Y term with
// half the coupling each, so the per-bond kind sum still matches the matrix
// entry (the flip-flop model at the same total strength).
SpinModel build_model(const CouplingSplit& split, CouplingPart part,
                      Interaction interaction);

struct DenseOperator {
  Eigen::MatrixXcd matrix;
  std::vector<int> support;  // best-known support, sorted
  int n_sites = 0;

  Eigen::Index dim() const { return matrix.rows(); }
};

// H = sum of coupling * V V as a dense 2^n matrix. Site 0 is the leftmost
// tensor factor (most significant bit of the basis index).
DenseOperator assemble_matrix(const SpinModel& model, int site_cap = 14);

DenseOperator site_operator(const LatticeSpec& lat, int site, PauliKind kind);

// Largest singular value. Hermitian / anti-Hermitian inputs go through a
// symmetric eigensolve; anything else through power iteration on O^dag O with
// a fixed seed vector (relative accuracy 1e-10).
double operator_norm(const DenseOperator& op);
double operator_norm(const Eigen::MatrixXcd& m);

}  // namespace lightcone
