#include <catch2/catch_amalgamated.hpp>

#include "gembed/objective.hpp"
#include "gembed/sampler.hpp"
#include "test_support.hpp"

using namespace gembed;
using test_support::random_matrix;
using test_support::random_symmetric;

namespace {

/// Direct residual-formula loss, kept as the oracle for the precomputed
/// quadratic-form evaluation used by the library.
double loss_direct(const Matrix& m, const LossContext& ctx) {
  return (ctx.X - m * ctx.Xt).squaredNorm() / (2.0 * ctx.m);
}

Matrix grad_direct(const Matrix& m, const LossContext& ctx) {
  return (m * ctx.Xt - ctx.X) * ctx.Xt.transpose() / ctx.m;
}

LossContext random_ctx(int p, int m, RandomStream& rs) {
  return make_loss_context_from_design(random_matrix(p, m, rs), random_matrix(p, m, rs));
}

/// Central finite differences of a scalar function of a matrix.
template <typename F>
Matrix finite_diff(const Matrix& at, F&& f, double step = 1e-5) {
  Matrix g(at.rows(), at.cols());
  Matrix probe = at;
  for (int i = 0; i < at.rows(); ++i)
    for (int j = 0; j < at.cols(); ++j) {
      probe(i, j) = at(i, j) + step;
      const double hi = f(probe);
      probe(i, j) = at(i, j) - step;
      const double lo = f(probe);
      probe(i, j) = at(i, j);
      g(i, j) = (hi - lo) / (2.0 * step);
    }
  return g;
}

}  // namespace

TEST_CASE("loss basics and hand example") {
  const auto g = ContextGraph::chain(3);
  Matrix x(1, 3);
  x << 1.0, 2.0, 3.0;
  const auto ctx = make_loss_context(x, g);

  Matrix m(1, 1);
  m << 0.5;
  // Conditional means are (1, 2, 1): residuals (0, 0, 2), loss = 2/3.
  REQUIRE(loss(m, ctx) == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
  REQUIRE(loss(Matrix::Zero(1, 1), ctx) ==
          Catch::Approx(x.squaredNorm() / (2.0 * 3)).epsilon(1e-12));

  const auto zero_ctx = make_loss_context(Matrix::Zero(1, 3), g);
  REQUIRE(loss(m, zero_ctx) == 0.0);

  REQUIRE_THROWS_AS(loss(Matrix::Zero(2, 2), ctx), InputError);
}

TEST_CASE("loss and grad match their residual-formula oracles") {
  RandomStream rs(808);
  for (int rep = 0; rep < 20; ++rep) {
    const auto ctx = random_ctx(4, 12, rs);
    const Matrix m = random_matrix(4, 4, rs);
    REQUIRE(loss(m, ctx) == Catch::Approx(loss_direct(m, ctx)).epsilon(1e-12));
    REQUIRE((grad(m, ctx) - grad_direct(m, ctx)).cwiseAbs().maxCoeff() <=
            1e-12 * std::max(1.0, grad_direct(m, ctx).cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("grad matches central finite differences") {
  RandomStream rs(909);
  const auto ctx = random_ctx(5, 20, rs);
  const Matrix m = random_matrix(5, 5, rs);
  const Matrix fd = finite_diff(m, [&](const Matrix& z) { return loss(z, ctx); });
  const Matrix an = grad(m, ctx);
  REQUIRE((an - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
}

TEST_CASE("grad vanishes at M* on noiseless data") {
  RandomStream rs(111);
  const auto model = random_model(4, 2, 0.5, SigmaSpec::identity(), 1);
  const Matrix design = random_matrix(4, 30, rs);
  const auto ctx = make_loss_context_from_design(model.m_star * design, design);
  REQUIRE(grad(model.m_star, ctx).cwiseAbs().maxCoeff() <= 1e-12);

  const auto empty = make_loss_context_from_design(random_matrix(3, 5, rs), Matrix::Zero(3, 5));
  REQUIRE(grad(Matrix::Identity(3, 3), empty).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sym_grad projects onto symmetric matrices") {
  RandomStream rs(222);
  const auto ctx = random_ctx(4, 10, rs);
  const Matrix m = random_matrix(4, 4, rs);
  const Matrix s = sym_grad(m, ctx);
  REQUIRE((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
  const Matrix g = grad(m, ctx);
  REQUIRE((s - 0.5 * (g + g.transpose())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hessian_summary") {
  // Xt = sqrt(m) I gives H = I.
  const int p = 4;
  const Matrix xt = std::sqrt(4.0) * Matrix::Identity(p, p);
  RandomStream rs(333);
  const auto ctx = make_loss_context_from_design(random_matrix(p, p, rs), xt);
  const auto hs = hessian_summary(ctx);
  REQUIRE(hs.kappa_mu == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(hs.kappa_L == Catch::Approx(1.0).margin(1e-12));

  // Rank-deficient Xt (m < p) has kappa_mu = 0.
  const auto thin = make_loss_context_from_design(random_matrix(5, 3, rs),
                                                  random_matrix(5, 3, rs));
  REQUIRE(thin.kappa_mu <= 1e-12);

  // Random Gaussian design, m >> p, is well conditioned.
  const auto fat = make_loss_context_from_design(random_matrix(5, 500, rs),
                                                 random_matrix(5, 500, rs));
  REQUIRE(fat.kappa_mu > 0.0);
  REQUIRE(fat.kappa_mu <= fat.kappa_L);
}

TEST_CASE("quadratic_form_check: both routes and special cases") {
  RandomStream rs(444);
  const auto ctx = random_ctx(4, 15, rs);

  REQUIRE(quadratic_form_check(Matrix::Zero(4, 4), ctx) == 0.0);
  REQUIRE(quadratic_form_check(Matrix::Identity(4, 4), ctx) ==
          Catch::Approx(ctx.H.trace()).epsilon(1e-10));
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix delta = random_symmetric(4, rs);
    const double direct = (delta * ctx.Xt).squaredNorm() / ctx.m;
    REQUIRE(quadratic_form_check(delta, ctx) == Catch::Approx(direct).epsilon(1e-10));
  }
  REQUIRE_THROWS_AS(quadratic_form_check(random_matrix(4, 4, rs), ctx), InputError);
}

TEST_CASE("loss is exactly quadratic: curvature gap equals half the form") {
  RandomStream rs(555);
  const auto ctx = random_ctx(4, 20, rs);
  const Matrix m_star = random_symmetric(4, rs);
  const double base = loss(m_star, ctx);
  const Matrix g0 = grad(m_star, ctx);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix delta = random_symmetric(4, rs);
    const Matrix m = m_star + delta;
    const double gap = loss(m, ctx) - base - g0.cwiseProduct(delta).sum();
    // L carries the 1/2 in each term, so the gap is half the curvature form.
    REQUIRE(gap == Catch::Approx(0.5 * quadratic_form_check(delta, ctx)).epsilon(1e-9));
  }
}

TEST_CASE("curvature form is pinched by kappa_mu and kappa_L") {
  RandomStream rs(666);
  const auto ctx = random_ctx(5, 40, rs);
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix delta = random_symmetric(5, rs);
    const double form = quadratic_form_check(delta, ctx);
    const double nsq = delta.squaredNorm();
    REQUIRE(form >= ctx.kappa_mu * nsq - 1e-9 * std::max(1.0, form));
    REQUIRE(form <= ctx.kappa_L * nsq + 1e-9 * std::max(1.0, form));
  }
}

TEST_CASE("stat_error: exact top-eigenvalue form and the sqrt(2r) bound") {
  // Build a context whose gradient at M = 0 is diag(3, 1, -2, 0):
  // Xt = sqrt(m) I makes H = I and C = X/sqrt(m), so grad(0) = -C.
  const int p = 4;
  Matrix x = Matrix::Zero(p, p);
  x.diagonal() << 3.0, 1.0, -2.0, 0.0;
  x *= -std::sqrt(static_cast<double>(p));
  const auto ctx = make_loss_context_from_design(x, std::sqrt(static_cast<double>(p)) *
                                                        Matrix::Identity(p, p));
  const Matrix m_star = Matrix::Zero(p, p);
  REQUIRE((grad(m_star, ctx) - (Matrix(p, p) << 3, 0, 0, 0, 0, 1, 0, 0, 0, 0, -2, 0, 0, 0, 0, 0)
                                   .finished())
              .cwiseAbs()
              .maxCoeff() <= 1e-12);

  const auto err = stat_error(ctx, m_star, 1);
  REQUIRE(err.exact == Catch::Approx(std::sqrt(13.0)).epsilon(1e-12));
  REQUIRE(err.bound == Catch::Approx(std::sqrt(2.0) * 3.0).epsilon(1e-12));
  REQUIRE(err.exact <= err.bound);

  // Zero gradient gives (0, 0).
  const auto zero_ctx = make_loss_context_from_design(Matrix::Zero(3, 5), Matrix::Zero(3, 5));
  const auto zero_err = stat_error(zero_ctx, Matrix::Zero(3, 3), 1);
  REQUIRE(zero_err.exact == 0.0);
  REQUIRE(zero_err.bound == 0.0);
}

TEST_CASE("stat_error dominates a Monte Carlo maximization oracle") {
  RandomStream rs(777);
  const int p = 6, r = 2;
  const auto ctx = random_ctx(p, 25, rs);
  const Matrix m_star = random_symmetric(p, rs);
  const auto err = stat_error(ctx, m_star, r);
  const Matrix g = grad(m_star, ctx);

  double best = 0.0;
  for (int trial = 0; trial < 100000; ++trial) {
    // Random symmetric rank-<=2r direction with unit Frobenius norm.
    const Matrix b = random_matrix(p, 2 * r, rs);
    const Matrix core = random_symmetric(2 * r, rs);
    Matrix delta = b * core * b.transpose();
    delta /= delta.norm();
    best = std::max(best, g.cwiseProduct(delta).sum());
  }
  REQUIRE(best <= err.exact * (1.0 + 1e-9));
  REQUIRE(best > 0.5 * err.exact);  // the oracle gets within range
}

TEST_CASE("gls reduces to the plain loss for identity covariances") {
  RandomStream rs(888);
  const auto g = ContextGraph::chain(6);
  const Matrix x = random_matrix(3, 6, rs);
  const auto ctx = make_loss_context(x, g);
  const Matrix m = random_matrix(3, 3, rs);
  const auto id = SigmaSpec::identity();
  REQUIRE(gls_loss(m, x, g, id) == Catch::Approx(loss(m, ctx)).epsilon(1e-12));
  REQUIRE((gls_grad(m, x, g, id) - grad(m, ctx)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("gls gradient matches finite differences") {
  RandomStream rs(999);
  const auto g = ContextGraph::omega_nn(8, 2);
  const Matrix x = random_matrix(3, 8, rs);
  std::vector<double> rho, scale;
  for (int j = 0; j < 8; ++j) {
    rho.push_back(0.3 * rs.uniform());
    scale.push_back(0.4 + 1.2 * rs.uniform());
  }
  const auto sig = SigmaSpec::per_node_toeplitz(rho, scale);
  const Matrix m = random_matrix(3, 3, rs);
  const Matrix fd =
      finite_diff(m, [&](const Matrix& z) { return gls_loss(z, x, g, sig); });
  const Matrix an = gls_grad(m, x, g, sig);
  REQUIRE((an - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
}

TEST_CASE("gls scales inversely with the covariance scale") {
  RandomStream rs(1010);
  const auto g = ContextGraph::chain(5);
  const Matrix x = random_matrix(2, 5, rs);
  const Matrix m = random_matrix(2, 2, rs);
  const double c = 2.5;
  const double base = gls_loss(m, x, g, SigmaSpec::shared_toeplitz(0.2, 1.0));
  const double scaled = gls_loss(m, x, g, SigmaSpec::shared_toeplitz(0.2, c));
  REQUIRE(scaled == Catch::Approx(base / c).epsilon(1e-12));
}

TEST_CASE("sample kappa_mu concentrates across replicates") {
  // Chain, ||M*||_2 = 0.4, Sigma = I, m = 8p, via the exact joint sampler.
  const int p = 8, m = 64;
  const auto g = ContextGraph::chain(m);
  std::vector<double> kappas;
  for (int rep = 0; rep < 50; ++rep) {
    const auto model = random_model(p, 3, 0.4, SigmaSpec::identity(), 9000 + rep);
    const Matrix x = exact_joint_sample(model, g, 100 + rep);
    kappas.push_back(make_loss_context(x, g).kappa_mu);
  }
  double mean = 0.0;
  for (double k : kappas) mean += k;
  mean /= kappas.size();
  double var = 0.0;
  for (double k : kappas) var += (k - mean) * (k - mean);
  var /= (kappas.size() - 1);
  REQUIRE(std::sqrt(var) <= 0.25 * mean);
}
