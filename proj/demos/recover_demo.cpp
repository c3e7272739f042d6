// End-to-end demo: build a chain-graph Gaussian embedding model, Gibbs-sample
// a dataset, then recover the interaction matrix with both solvers.

#include <cstdio>

#include "gembed/context_graph.hpp"
#include "gembed/metrics.hpp"
#include "gembed/model.hpp"
#include "gembed/objective.hpp"
#include "gembed/sampler.hpp"
#include "gembed/solver_convex.hpp"
#include "gembed/solver_nonconvex.hpp"

int main() {
  using namespace gembed;

  const int p = 30, r = 3, m = 600;
  const auto graph = ContextGraph::chain(m);
  const auto model = random_model(p, r, 0.4, SigmaSpec::identity(), /*seed=*/7);

  GibbsConfig gibbs;
  gibbs.burn_in = 300;
  gibbs.seed = 11;
  const Matrix train = gibbs_sample(model, graph, gibbs);
  gibbs.seed = 12;
  const Matrix val = gibbs_sample(model, graph, gibbs);

  const LossContext ctx = make_loss_context(train, graph);
  std::printf("p=%d r=%d m=%d   kappa_mu=%.3f kappa_L=%.3f\n", p, r, m, ctx.kappa_mu,
              ctx.kappa_L);

  ConvexConfig ccfg;
  const auto sel = select_lambda(ctx, val, graph, ccfg);
  std::printf("convex:    lambda=%.4g  iters=%d  rel_err=%.4f\n", sel.lambda,
              sel.result.iters, rel_fro_error(sel.result.m_hat, model.m_star));

  NonconvexConfig ncfg;
  ncfg.r = r;
  ncfg.max_iters = 4000;
  const auto fit = fit_nonconvex(ctx, ncfg, model.v_star);
  std::printf("nonconvex: iters=%d  rel_err=%.4f  d2=%.6g\n", fit.iters,
              rel_fro_error(fit.m_hat, model.m_star), fit.distance_trace.back());
  return 0;
}
