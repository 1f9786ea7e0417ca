#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fluctlab/errors.hpp"
#include "fluctlab/gibbs.hpp"

using namespace fluctlab;

namespace {

LocalOperator site_op(const MatrixXcd& m, int site) {
  return LocalOperator(Interval(site, site), m);
}

double max_abs(const MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

// Generic functional invariants every state oracle must satisfy.
void check_state_axioms(const StateFunctional& state, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CHECK(std::abs(state.expect(identity_op(Interval(0, 1))) - 1.0) < 1e-10);
  for (int trial = 0; trial < 5; ++trial) {
    MatrixXcd m = random_hermitian(4, rng());
    m += cplx(0.0, 1.0) * random_hermitian(4, rng());  // non-normal input
    LocalOperator q(Interval(0, 1), m);
    cplx pos = state.expect(multiply(q.adjoint(), q));
    CHECK(pos.real() > -1e-10);
    CHECK(std::abs(pos.imag()) < 1e-10);
    CHECK(std::abs(state.expect(q)) <= q.norm() + 1e-10);
    CHECK(std::abs(state.expect(q.adjoint()) - std::conj(state.expect(q))) <
          1e-10);
  }
}

}  // namespace

TEST_CASE("product state axioms and simple expectations") {
  ProductState tracial = ProductState::tracial();
  check_state_axioms(tracial, 101);
  CHECK(std::abs(tracial.expect(site_op(pauli::sz(), 0))) < 1e-14);
  ProductState up = ProductState::plus_z();
  check_state_axioms(up, 102);
  CHECK(std::abs(up.expect(site_op(pauli::sz(), 3)) - 1.0) < 1e-14);
  CHECK(std::abs(up.expect(site_op(pauli::sx(), 0))) < 1e-14);
}

TEST_CASE("product state factorizes over disjoint supports") {
  ProductState up = ProductState::plus_z();
  LocalOperator a(Interval(0, 0), random_hermitian(2, 7));
  LocalOperator b(Interval(0, 0), random_hermitian(2, 8));
  cplx joint = up.expect_pair(a, b, -5);
  CHECK(std::abs(joint - up.expect(a) * up.expect(b)) < 1e-14);
  // Overlapping shift falls back to the embedded product.
  cplx same_site = up.expect_pair(a, b, 0);
  CHECK(std::abs(same_site - up.expect(multiply(a, b))) < 1e-14);
}

TEST_CASE("product window density is the tensor power") {
  ProductState tracial = ProductState::tracial();
  MatrixXcd rho = tracial.window_density(Interval(0, 2));
  CHECK(max_abs(rho - MatrixXcd::Identity(8, 8) / 8.0) < 1e-14);
  CHECK(std::abs(rho.trace() - 1.0) < 1e-14);
}

TEST_CASE("product state rejects unnormalized densities") {
  CHECK_THROWS_AS(ProductState(2.0 * MatrixXcd::Identity(2, 2)),
                  InvariantViolationError);
}

TEST_CASE("two-point correlations of a product state vanish") {
  ProductState up = ProductState::plus_z();
  TwoPointTable table =
      two_point_decay(up, site_op(pauli::sx(), 0), site_op(pauli::sx(), 0),
                      {1, 2, 3});
  for (double v : table.values) CHECK(v < 1e-14);
  CHECK(std::isinf(up.mixing_certificate()->rate));
}

TEST_CASE("infinite-temperature gibbs state is tracial") {
  GibbsState state(Interaction::transverse_field_ising(), 0.0);
  check_state_axioms(state, 103);
  CHECK(std::abs(state.expect(site_op(pauli::sz(), 0))) < 1e-12);
  MatrixXcd rho = state.window_density(Interval(0, 1));
  CHECK(max_abs(rho - MatrixXcd::Identity(4, 4) / 4.0) < 1e-12);
  auto cert = state.mixing_certificate();
  REQUIRE(cert.has_value());
  CHECK(std::isinf(cert->rate));
}

TEST_CASE("classical nearest-neighbor correlation matches the bond formula") {
  // With a pure two-body sigma_z sigma_z coupling the bond variables are
  // independent under the open-chain Gibbs measure, so the nearest-neighbor
  // correlation is tanh(beta) in every window and in the limit.
  for (double beta : {0.5, 1.0}) {
    GibbsState state(Interaction::by_name("ising", 1.0, 0.0), beta);
    LocalOperator zz = pauli::word({"pauli_z", "pauli_z"}, 0);
    CHECK(std::abs(state.expect(zz) - std::tanh(beta)) < 1e-10);
    auto extr = state.thermodynamic_expect(zz, 1e-8);
    CHECK(std::abs(extr.value - std::tanh(beta)) < 1e-10);
    CHECK(extr.error_bar < 1e-10);
  }
}

TEST_CASE("classical pair correlations decay at rate -log tanh(beta)") {
  double beta = 0.5;
  GibbsState state(Interaction::by_name("ising", 1.0, 0.0), beta);
  LocalOperator z = site_op(pauli::sz(), 0);
  TwoPointTable table = two_point_decay(state, z, z, {1, 2, 3, 4});
  for (std::size_t i = 0; i < table.separations.size(); ++i)
    CHECK(std::abs(table.values[i] -
                   std::pow(std::tanh(beta), table.separations[i])) < 1e-9);
  CHECK(std::abs(table.fitted_rate() + std::log(std::tanh(beta))) < 1e-6);
}

TEST_CASE("gibbs expectations are translation covariant") {
  GibbsState state(Interaction::transverse_field_ising(), 0.7);
  LocalOperator q(Interval(0, 1), random_hermitian(4, 55));
  cplx base = state.expect(q);
  CHECK(std::abs(state.expect(translate(q, 4)) - base) < 1e-11);
  CHECK(std::abs(state.expect(translate(q, -3)) - base) < 1e-11);
}

TEST_CASE("gibbs axioms at finite temperature") {
  GibbsState state(Interaction::transverse_field_ising(), 1.0);
  check_state_axioms(state, 104);
}

TEST_CASE("window density reproduces expectations on the window") {
  GibbsState state(Interaction::transverse_field_ising(), 0.8);
  MatrixXcd rho = state.window_density(Interval(0, 1));
  CHECK(std::abs(rho.trace() - 1.0) < 1e-11);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
  LocalOperator q(Interval(0, 1), random_hermitian(4, 77));
  cplx via_density = (rho * q.matrix()).trace();
  CHECK(std::abs(via_density - state.expect(q)) < 1e-11);
}

TEST_CASE("parity-sector solver agrees with the dense path") {
  WindowPolicy parity_policy;
  parity_policy.parity_min_dim = 16;  // force the sector path on small windows
  GibbsState sectored(Interaction::transverse_field_ising(1.0, 0.9), 1.2,
                      parity_policy);
  GibbsState plain(Interaction::transverse_field_ising(1.0, 0.9), 1.2);
  // Diagonal observables take a dedicated fast path.
  LocalOperator zz = pauli::word({"pauli_z", "pauli_z"}, 0);
  CHECK(std::abs(sectored.expect(zz) - plain.expect(zz)) < 1e-10);
  // General observables reconstruct full-space eigenvectors.
  LocalOperator q(Interval(0, 1), random_hermitian(4, 91));
  CHECK(std::abs(sectored.expect(q) - plain.expect(q)) < 1e-10);
  LocalOperator x = site_op(pauli::sx(), 0);
  CHECK(std::abs(sectored.expect_pair(x, x, 3) - plain.expect_pair(x, x, 3)) <
        1e-10);
  LocalOperator z = site_op(pauli::sz(), 0);
  CHECK(std::abs(sectored.expect_pair(z, z, 2) - plain.expect_pair(z, z, 2)) <
        1e-10);
}

TEST_CASE("thermodynamic extrapolation reports decaying increments") {
  GibbsState state(Interaction::transverse_field_ising(), 1.0);
  auto extr = state.thermodynamic_expect(site_op(pauli::sx(), 0), 1e-5);
  REQUIRE(extr.increments.size() >= 2);
  CHECK(extr.increments.back() < 1e-5);
  CHECK(extr.increment_fit.slope < 0.0);
  CHECK(extr.error_bar >= extr.increments.back());
  for (std::size_t i = 1; i < extr.increments.size(); ++i)
    CHECK(extr.increments[i] < extr.increments[i - 1]);
}

TEST_CASE("kms residual vanishes for trivial cases and stays tiny in general") {
  GibbsState hot(Interaction::transverse_field_ising(), 0.0);
  LocalOperator a(Interval(1, 2), random_hermitian(4, 21));
  LocalOperator b(Interval(4, 5), random_hermitian(4, 22));
  CHECK(hot.kms_residual(a, b, Interval(0, 7)) < 1e-11);
  GibbsState warm(Interaction::transverse_field_ising(), 1.0);
  CHECK(warm.kms_residual(a, identity_op(Interval(3, 3)), Interval(0, 7)) <
        1e-11);
  CHECK(warm.kms_residual(a, b, Interval(0, 7)) < 1e-9);
}

TEST_CASE("gibbs mixing certificate bounds sampled truncated correlations") {
  GibbsState state(Interaction::transverse_field_ising(), 0.5);
  auto cert = state.mixing_certificate();
  REQUIRE(cert.has_value());
  CHECK(cert->exponential());
  LocalOperator z = site_op(pauli::sz(), 0);
  TwoPointTable table = two_point_decay(state, z, z, {2, 3, 4, 5});
  for (std::size_t i = 0; i < table.values.size(); ++i)
    CHECK(table.values[i] <=
          cert->prefactor * std::exp(-cert->rate * table.separations[i]) +
              1e-12);
}

TEST_CASE("gibbs guards on policies and windows") {
  CHECK_THROWS(GibbsState(Interaction::transverse_field_ising(), -1.0));
  WindowPolicy tight;
  tight.max_window_dim = 1 << 4;
  GibbsState state(Interaction::transverse_field_ising(), 1.0, tight);
  CHECK_THROWS_AS(state.expect(LocalOperator(Interval(0, 4),
                                             MatrixXcd::Identity(32, 32))),
                  WindowCapError);
  WindowPolicy fixed;
  fixed.adaptive = false;
  fixed.fixed_window = Interval(0, 5);
  GibbsState pinned(Interaction::transverse_field_ising(), 1.0, fixed);
  CHECK_FALSE(pinned.translation_invariant());
  CHECK_THROWS_AS(pinned.expect(site_op(pauli::sz(), 9)), SupportError);
  CHECK(std::abs(pinned.expect(identity_op(Interval(2, 3))) - 1.0) < 1e-12);
}
