#include <doctest.h>

#include <cmath>
#include <random>

#include "lightcone/lattice.hpp"

using namespace lightcone;

namespace {

// Independent oracle: max row sum of j0/d^alpha restricted by the predicate,
// recomputed from raw coordinates without touching CouplingSplit.
template <class Pred>
double row_sum_max(const LatticeSpec& lat, double alpha, double j0, Pred keep) {
  double best = 0;
  for (int y = 0; y < lat.n_sites(); ++y) {
    double s = 0;
    for (int z = 0; z < lat.n_sites(); ++z) {
      if (z == y) continue;
      double d = distance(lat, y, z);
      if (keep(d)) s += j0 * std::pow(d, -alpha);
    }
    best = std::max(best, s);
  }
  return best;
}

constexpr double kZeta3 = 1.2020569031595943;  // Riemann zeta(3)

}  // namespace

TEST_SUITE_BEGIN("lattice");

TEST_CASE("construction and site ordering") {
  auto chain = build_lattice({5}, Metric::euclidean);
  CHECK(chain.n_sites() == 5);
  CHECK(chain.dimension == 1);
  CHECK(chain.sites[3][0] == 3);

  auto grid = build_lattice({3, 3}, Metric::euclidean);
  CHECK(grid.n_sites() == 9);
  CHECK(grid.dimension == 2);
  // Row-major: site 4 is (1,1).
  CHECK(grid.sites[4][0] == 1);
  CHECK(grid.sites[4][1] == 1);

  CHECK_THROWS_AS(build_lattice({}, Metric::euclidean), invalid_input_error);
  CHECK_THROWS_AS(build_lattice({1, 3}, Metric::euclidean), invalid_input_error);
  CHECK_THROWS_AS(build_lattice({4, 4, 4, 4}, Metric::euclidean),
                  invalid_input_error);
}

TEST_CASE("distances") {
  auto chain = build_lattice({5}, Metric::euclidean);
  CHECK(distance(chain, 0, 3) == doctest::Approx(3.0));
  CHECK(distance(chain, 2, 2) == 0.0);
  CHECK_THROWS_AS(distance(chain, 0, 7), invalid_input_error);

  auto grid = build_lattice({3, 3}, Metric::euclidean);
  // (0,0) -> (1,1)
  CHECK(distance(grid, 0, 4) == doctest::Approx(std::sqrt(2.0)));
  auto gridg = build_lattice({3, 3}, Metric::graph);
  CHECK(distance(gridg, 0, 4) == doctest::Approx(2.0));

  CHECK(diameter(grid) == doctest::Approx(std::sqrt(8.0)));
  CHECK(diameter(gridg) == doctest::Approx(4.0));
}

TEST_CASE("distance axioms on a random lattice") {
  auto grid = build_lattice({4, 5}, Metric::euclidean);
  auto gridg = build_lattice({4, 5}, Metric::graph);
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> pick(0, grid.n_sites() - 1);
  for (int it = 0; it < 300; ++it) {
    int a = pick(rng), b = pick(rng), c = pick(rng);
    for (const auto* g : {&grid, &gridg}) {
      double ab = distance(*g, a, b);
      CHECK(ab == distance(*g, b, a));
      CHECK(ab >= 0);
      CHECK((ab == 0) == (grid.sites[a] == grid.sites[b]));
      CHECK(ab <= distance(*g, a, c) + distance(*g, c, b) + 1e-12);
    }
  }
}

TEST_CASE("coupling split: frozen interior row sums") {
  auto chain = build_lattice({7}, Metric::euclidean);
  auto cs = coupling_split(chain, 3.0, 1.0, 2.0);
  // Interior site sees both neighbors at d=1 and d=2: 2*(1 + 1/8).
  CHECK(cs.lambda_sr == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(cs.lambda_sr ==
        doctest::Approx(row_sum_max(chain, 3, 1, [](double d) { return d <= 2; })));

  auto chain200 = build_lattice({200}, Metric::euclidean);
  auto cs200 = coupling_split(chain200, 3.0, 1.0, 2.0);
  // Long-part row sum converges to the zeta tail 2*(zeta(3) - 1 - 1/8).
  const double tail = 2.0 * (kZeta3 - 1.0 - 0.125);
  CHECK(cs200.lambda_chi ==
        doctest::Approx(row_sum_max(chain200, 3, 1, [](double d) { return d > 2; }))
            .epsilon(1e-14));
  CHECK(std::abs(cs200.lambda_chi - tail) < 5e-4);
  auto cs400 = coupling_split(build_lattice({400}, Metric::euclidean), 3.0, 1.0, 2.0);
  CHECK(std::abs(cs400.lambda_chi - tail) < std::abs(cs200.lambda_chi - tail));
}

TEST_CASE("coupling split: partition and degenerate cutoff") {
  auto grid = build_lattice({4, 4}, Metric::euclidean);
  auto cs = coupling_split(grid, 2.5, 0.7, 1.5);
  CHECK((cs.full - cs.short_part - cs.long_part).cwiseAbs().maxCoeff() == 0.0);
  CHECK(cs.full.diagonal().cwiseAbs().maxCoeff() == 0.0);
  for (int y = 0; y < grid.n_sites(); ++y)
    for (int z = 0; z < grid.n_sites(); ++z) {
      if (y == z) continue;
      double d = distance(grid, y, z);
      CHECK(cs.full(y, z) <= 0.7 * std::pow(d, -2.5) * (1 + 1e-15));
      if (d > cs.chi) CHECK(cs.short_part(y, z) == 0.0);
      if (d <= cs.chi) CHECK(cs.long_part(y, z) == 0.0);
    }

  // Cutoff at/above the diameter: nothing left in the long part.
  auto all_sr = coupling_split(grid, 2.5, 0.7, diameter(grid));
  CHECK(all_sr.lambda_chi == 0.0);
  CHECK(all_sr.long_part.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(coupling_split(grid, -1.0, 1.0, 2.0), invalid_input_error);
  CHECK_THROWS_AS(coupling_split(grid, 3.0, 1.0, 0.5), invalid_input_error);
}

TEST_CASE("lambda monotone in chi") {
  auto chain = build_lattice({40}, Metric::euclidean);
  auto grid = build_lattice({5, 5}, Metric::graph);
  for (const auto* lat : {&chain, &grid}) {
    double prev_sr = -1, prev_lr = 1e300;
    for (double chi : {1.0, 1.5, 2.0, 3.0, 5.0, 8.0}) {
      auto cs = coupling_split(*lat, 2.2, 1.3, chi);
      CHECK(cs.lambda_sr >= prev_sr);
      CHECK(cs.lambda_chi <= prev_lr);
      prev_sr = cs.lambda_sr;
      prev_lr = cs.lambda_chi;
    }
  }
}

TEST_CASE("1D integral-comparison tail bound") {
  auto chain = build_lattice({300}, Metric::euclidean);
  for (double alpha : {1.5, 2.5, 3.0})
    for (double chi : {1.0, 2.0, 3.0, 5.0, 10.0}) {
      auto cs = coupling_split(chain, alpha, 1.0, chi);
      double cap = 2.0 * std::pow(chi, 1.0 - alpha) / (alpha - 1.0) +
                   2.0 * std::pow(chi, -alpha);
      CHECK(cs.lambda_chi <= cap * (1 + 1e-12));
    }
}

TEST_CASE("lambda scales linearly in j0") {
  auto chain = build_lattice({30}, Metric::euclidean);
  auto a = coupling_split(chain, 2.5, 1.0, 2.0);
  auto b = coupling_split(chain, 2.5, 3.5, 2.0);
  CHECK(b.lambda_sr == doctest::Approx(3.5 * a.lambda_sr).epsilon(1e-14));
  CHECK(b.lambda_chi == doctest::Approx(3.5 * a.lambda_chi).epsilon(1e-14));
}

TEST_SUITE_END();
