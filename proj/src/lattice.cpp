#include "lightcone/lattice.hpp"

#include <cmath>
#include <cstdint>

namespace lightcone {

LatticeSpec build_lattice(const std::vector<int>& extents, Metric metric) {
  if (extents.empty() || extents.size() > 3)
    throw invalid_input_error("build_lattice: need 1 to 3 axes, got " +
                              std::to_string(extents.size()));
  std::int64_t total = 1;
  for (int e : extents) {
    if (e < 2)
      throw invalid_input_error("build_lattice: every extent must be >= 2");
    total *= e;
  }
  if (total > 1 << 22)
    throw resource_limit_error("build_lattice: refusing " +
                               std::to_string(total) + " sites");

  LatticeSpec lat;
  lat.extents = extents;
  lat.dimension = static_cast<int>(extents.size());
  lat.metric = metric;
  lat.sites.reserve(static_cast<std::size_t>(total));
  // Row-major: the last axis varies fastest.
  std::array<int, 3> c = {0, 0, 0};
  for (std::int64_t i = 0; i < total; ++i) {
    lat.sites.push_back(c);
    for (int a = lat.dimension - 1; a >= 0; --a) {
      if (++c[a] < extents[a]) break;
      c[a] = 0;
    }
  }
  return lat;
}

double distance(const LatticeSpec& lat, int y, int z) {
  if (y < 0 || z < 0 || y >= lat.n_sites() || z >= lat.n_sites())
    throw invalid_input_error("distance: site index out of range");
  const auto& a = lat.sites[y];
  const auto& b = lat.sites[z];
  if (lat.metric == Metric::graph) {
    int s = 0;
    for (int k = 0; k < lat.dimension; ++k) s += std::abs(a[k] - b[k]);
    return static_cast<double>(s);
  }
  double s = 0;
  for (int k = 0; k < lat.dimension; ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

double diameter(const LatticeSpec& lat) {
  // Open hypercube: the farthest pair is corner to corner.
  std::array<int, 3> span = {0, 0, 0};
  for (int k = 0; k < lat.dimension; ++k) span[k] = lat.extents[k] - 1;
  if (lat.metric == Metric::graph) {
    int s = 0;
    for (int k = 0; k < lat.dimension; ++k) s += span[k];
    return static_cast<double>(s);
  }
  double s = 0;
  for (int k = 0; k < lat.dimension; ++k)
    s += static_cast<double>(span[k]) * span[k];
  return std::sqrt(s);
}

CouplingSplit coupling_split(const LatticeSpec& lat, double alpha, double j0,
                             double chi) {
  if (!(alpha > 0)) throw invalid_input_error("coupling_split: alpha must be > 0");
  if (!(j0 > 0)) throw invalid_input_error("coupling_split: j0 must be > 0");
  if (!(chi >= 1)) throw invalid_input_error("coupling_split: chi must be >= 1");
  const int n = lat.n_sites();
  if (n > kMaxMatrixSites)
    throw resource_limit_error("coupling_split: " + std::to_string(n) +
                               " sites exceeds dense-matrix cap");

  CouplingSplit cs;
  cs.lattice = lat;
  cs.alpha = alpha;
  cs.j0 = j0;
  cs.chi = chi;
  cs.full = Eigen::MatrixXd::Zero(n, n);
  cs.short_part = Eigen::MatrixXd::Zero(n, n);
  cs.long_part = Eigen::MatrixXd::Zero(n, n);

  for (int y = 0; y < n; ++y) {
    for (int z = y + 1; z < n; ++z) {
      const double d = distance(lat, y, z);
      const double j = j0 * std::pow(d, -alpha);
      cs.full(y, z) = cs.full(z, y) = j;
      // Each pair lands in exactly one part, so full == short + long exactly.
      if (d <= chi)
        cs.short_part(y, z) = cs.short_part(z, y) = j;
      else
        cs.long_part(y, z) = cs.long_part(z, y) = j;
    }
  }
  cs.lambda_sr = n ? cs.short_part.rowwise().sum().maxCoeff() : 0.0;
  cs.lambda_chi = n ? cs.long_part.rowwise().sum().maxCoeff() : 0.0;
  return cs;
}

}  // namespace lightcone
