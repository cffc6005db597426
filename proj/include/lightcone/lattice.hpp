#pragma once
#include <Eigen/Dense>
#include <vector>

#include "lightcone/errors.hpp"

namespace lightcone {

// Largest site count for which dense site-by-site matrices are built.
inline constexpr int kMaxMatrixSites = 4096;

enum class Metric { euclidean, graph };

// Finite hypercubic lattice, unit spacing, open boundaries.
// Site indices are row-major over the coordinate tuples, so index <-> coordinate
// is a stable bijection.
struct LatticeSpec {
  std::vector<int> extents;
  int dimension = 0;
  Metric metric = Metric::euclidean;
  std::vector<std::array<int, 3>> sites;  // coordinates, unused axes zero

  int n_sites() const { return static_cast<int>(sites.size()); }
};

// extents: one entry per axis, each >= 2, 1 <= D <= 3.
LatticeSpec build_lattice(const std::vector<int>& extents, Metric metric);

double distance(const LatticeSpec& lat, int y, int z);

// Largest pairwise distance.
double diameter(const LatticeSpec& lat);

// Power-law couplings j0/d^alpha, split at cutoff chi:
//   short: pairs with d <= chi, long: pairs with d > chi.
// lambda_sr / lambda_chi are the largest row sums of the two parts; the max over
// rows keeps the rates valid uniformly, edge sites included.
struct CouplingSplit {
  LatticeSpec lattice;
  double alpha = 0, j0 = 0, chi = 0;
  Eigen::MatrixXd full, short_part, long_part;
  double lambda_sr = 0, lambda_chi = 0;
};

// alpha > 0, j0 > 0, chi >= 1. Couplings saturate j0/d^alpha exactly: that is
// the worst case any bound downstream has to dominate.
CouplingSplit coupling_split(const LatticeSpec& lat, double alpha, double j0,
                             double chi);

}  // namespace lightcone
