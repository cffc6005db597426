#include <doctest.h>

#include <random>

#include "lightcone/model.hpp"
#include "oracles.hpp"

using namespace lightcone;

TEST_SUITE_BEGIN("model");

TEST_CASE("build_model term lists") {
  auto chain2 = build_lattice({2}, Metric::euclidean);
  auto cs2 = coupling_split(chain2, 3.0, 1.0, 1.0);
  auto m = build_model(cs2, CouplingPart::full, Interaction::XX);
  REQUIRE(m.terms.size() == 1);
  CHECK(m.terms[0].kind == PauliKind::X);
  CHECK(m.terms[0].y == 0);
  CHECK(m.terms[0].z == 1);
  CHECK(m.terms[0].coupling == 1.0);

  auto chain4 = build_lattice({4}, Metric::euclidean);
  auto cs4 = coupling_split(chain4, 3.0, 1.0, 1.0);
  CHECK(build_model(cs4, CouplingPart::short_range, Interaction::XX).terms.size() == 3);
  CHECK(build_model(cs4, CouplingPart::short_range, Interaction::ZZ).terms.size() == 3);

  // Long part empty once the cutoff swallows the diameter.
  auto all_sr = coupling_split(chain4, 3.0, 1.0, 3.0);
  CHECK(build_model(all_sr, CouplingPart::long_range, Interaction::XX).terms.empty());

  // XY emits two half-strength kinds per bond; per-bond kind sum is unchanged.
  auto xy = build_model(cs2, CouplingPart::full, Interaction::XY);
  REQUIRE(xy.terms.size() == 2);
  CHECK(xy.terms[0].kind == PauliKind::X);
  CHECK(xy.terms[1].kind == PauliKind::Y);
  CHECK(xy.terms[0].coupling + xy.terms[1].coupling == doctest::Approx(1.0));

  for (const auto& t : xy.terms) {
    CHECK(t.y != t.z);
    CHECK(t.coupling >= 0);
  }
}

TEST_CASE("assemble_matrix against kron oracle") {
  auto chain2 = build_lattice({2}, Metric::euclidean);
  auto cs2 = coupling_split(chain2, 3.0, 1.0, 1.0);
  auto h2 = assemble_matrix(build_model(cs2, CouplingPart::full, Interaction::XX));
  CHECK((h2.matrix - oracle::pauli_string("XX")).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(operator_norm(h2) == doctest::Approx(1.0).epsilon(1e-12));

  SpinModel empty;
  empty.lattice = chain2;
  empty.n_sites = 2;
  auto z = assemble_matrix(empty);
  CHECK(z.matrix.cwiseAbs().maxCoeff() == 0.0);
  CHECK(operator_norm(z) == 0.0);
}

TEST_CASE("3-site chain norms, frozen from exact diagonalization") {
  auto chain3 = build_lattice({3}, Metric::euclidean);
  auto cs = coupling_split(chain3, 3.0, 1.0, 1.0);

  // Single-kind XX chain: H = X0 X1 + X1 X2; commuting terms, spectrum
  // x0 x1 + x1 x2 over x = +-1, so the norm is exactly 2.
  auto hxx = assemble_matrix(build_model(cs, CouplingPart::short_range, Interaction::XX));
  oracle::Mat ref = oracle::pauli_string("XXI") + oracle::pauli_string("IXX");
  CHECK((hxx.matrix - ref).cwiseAbs().maxCoeff() < 1e-15);
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es(ref);
  double oracle_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  CHECK(oracle_norm == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(operator_norm(hxx) == doctest::Approx(2.0).epsilon(1e-12));

  // Flip-flop chain (XY interaction, half strength per kind): single-particle
  // hopping spectrum {0, +-sqrt(2)} and empty/full sectors at 0, norm sqrt(2).
  auto hxy = assemble_matrix(build_model(cs, CouplingPart::short_range, Interaction::XY));
  oracle::Mat refxy = 0.5 * (oracle::pauli_string("XXI") + oracle::pauli_string("YYI") +
                             oracle::pauli_string("IXX") + oracle::pauli_string("IYY"));
  CHECK((hxy.matrix - refxy).cwiseAbs().maxCoeff() < 1e-15);
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es2(refxy);
  CHECK(es2.eigenvalues().cwiseAbs().maxCoeff() ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
  CHECK(operator_norm(hxy) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("assemble_matrix is linear in the term list") {
  auto chain4 = build_lattice({4}, Metric::euclidean);
  auto cs = coupling_split(chain4, 2.0, 1.0, 1.0);
  auto m_short = build_model(cs, CouplingPart::short_range, Interaction::XX);
  auto m_long = build_model(cs, CouplingPart::long_range, Interaction::XX);
  auto m_full = build_model(cs, CouplingPart::full, Interaction::XX);
  SpinModel merged = m_short;
  merged.terms.insert(merged.terms.end(), m_long.terms.begin(), m_long.terms.end());
  Eigen::MatrixXcd sum =
      assemble_matrix(m_short).matrix + assemble_matrix(m_long).matrix;
  CHECK((assemble_matrix(merged).matrix - sum).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((assemble_matrix(m_full).matrix - sum).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("site_operator embeddings") {
  auto chain2 = build_lattice({2}, Metric::euclidean);
  auto z0 = site_operator(chain2, 0, PauliKind::Z);
  CHECK((z0.matrix - oracle::pauli_string("ZI")).cwiseAbs().maxCoeff() < 1e-15);
  auto x1 = site_operator(chain2, 1, PauliKind::X);
  CHECK((x1.matrix - oracle::pauli_string("IX")).cwiseAbs().maxCoeff() < 1e-15);
  auto y1 = site_operator(chain2, 1, PauliKind::Y);
  CHECK((y1.matrix - oracle::pauli_string("IY")).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(operator_norm(z0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(z0.support == std::vector<int>{0});

  CHECK_THROWS_AS(site_operator(chain2, 5, PauliKind::X), invalid_input_error);
  CHECK_THROWS_AS(parse_pauli_kind("W"), invalid_input_error);
  CHECK(parse_pauli_kind("z") == PauliKind::Z);
  CHECK(parse_interaction("xy") == Interaction::XY);
  CHECK_THROWS_AS(parse_interaction("YZ"), invalid_input_error);
}

TEST_CASE("resource cap") {
  auto chain = build_lattice({6}, Metric::euclidean);
  auto cs = coupling_split(chain, 3.0, 1.0, 1.0);
  auto m = build_model(cs, CouplingPart::full, Interaction::XX);
  CHECK_THROWS_AS(assemble_matrix(m, 4), resource_limit_error);
}

TEST_CASE("operator_norm paths") {
  // Anti-Hermitian: [X,Y] = 2iZ.
  oracle::Mat x = oracle::pauli('X'), y = oracle::pauli('Y');
  CHECK(operator_norm(Eigen::MatrixXcd(x * y - y * x)) ==
        doctest::Approx(2.0).epsilon(1e-12));

  // General matrices against an SVD oracle.
  std::mt19937 rng(11);
  std::normal_distribution<double> g;
  for (int d : {3, 8, 17}) {
    Eigen::MatrixXcd m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = oracle::cplx(g(rng), g(rng));
    CHECK(operator_norm(m) ==
          doctest::Approx(oracle::spectral_norm(m)).epsilon(1e-10));
  }
}

TEST_CASE("norm is unitarily invariant and stable under embedding") {
  std::mt19937 rng(23);
  auto chain3 = build_lattice({3}, Metric::euclidean);
  auto cs = coupling_split(chain3, 2.0, 1.0, 2.0);
  auto h = assemble_matrix(build_model(cs, CouplingPart::full, Interaction::XX));
  double n0 = operator_norm(h);
  for (int it = 0; it < 5; ++it) {
    oracle::Mat u = oracle::random_unitary(h.matrix.rows(), rng);
    CHECK(operator_norm(Eigen::MatrixXcd(u * h.matrix * u.adjoint())) ==
          doctest::Approx(n0).epsilon(1e-10));
  }

  // A ox I on a bigger chain keeps the norm.
  auto chain5 = build_lattice({5}, Metric::euclidean);
  auto z2 = site_operator(chain5, 2, PauliKind::Z);
  CHECK(operator_norm(z2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_SUITE_END();
