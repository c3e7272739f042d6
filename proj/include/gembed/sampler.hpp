#pragma once

#include <cstdint>
#include <iostream>
#include <vector>

#include "gembed/context_graph.hpp"
#include "gembed/errors.hpp"
#include "gembed/model.hpp"
#include "gembed/rng.hpp"

namespace gembed {

/// Systematic-scan Gibbs sampler configuration. The chain starts at X = 0
/// and visits nodes in index order; both choices are fixed for
/// reproducibility.
struct GibbsConfig {
  int burn_in = 1000;
  int thin = 1;
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_gibbs_model(const EmbeddingModel& model, const ContextGraph& g) {
  if (model.sigmas.node_count() != 0 && model.sigmas.node_count() != g.m())
    throw InvalidModel("gibbs: per-node sigma count does not match graph size");
  if (model.sigmas.dim() != 0 && model.sigmas.dim() != model.p)
    throw InvalidModel("gibbs: sigma dimension does not match p");
  const auto rep = validate(g, model.m_star);
  if (!rep.valid_sufficient) {
    if (rep.valid_exact.has_value() && *rep.valid_exact) {
      std::cerr << "gibbs: sufficient condition ||A||*||M|| < 1 fails ("
                << rep.adjacency_norm * rep.interaction_norm
                << ") but exact joint check passes; proceeding\n";
    } else {
      throw InvalidModel("gibbs: model fails the sufficient condition and the exact check "
                         "is negative or unavailable");
    }
  }
}

/// One systematic sweep: x_j <- N(M* sum_{k in c_j} x_k, Sigma_j) with all
/// other columns held at their current values.
inline void gibbs_sweep(const EmbeddingModel& model, const ContextGraph& g, RandomStream& rs,
                        Matrix& x, Vector& ctx_sum, Vector& noise) {
  for (int j = 0; j < g.m(); ++j) {
    ctx_sum.setZero();
    for (int k : g.context(j)) ctx_sum += x.col(k);
    model.sigmas.draw_noise(j, model.p, rs, noise);
    x.col(j) = model.m_star * ctx_sum + noise;
  }
}

}  // namespace detail

/// Run burn_in + thin sweeps and return the final state (one dataset).
/// Deterministic given the seed.
inline Matrix gibbs_sample(const EmbeddingModel& model, const ContextGraph& g,
                           const GibbsConfig& cfg) {
  if (cfg.burn_in < 0 || cfg.thin < 1) throw InputError("gibbs: bad burn_in/thin");
  detail::check_gibbs_model(model, g);
  RandomStream rs(cfg.seed);
  Matrix x = Matrix::Zero(model.p, g.m());
  Vector ctx_sum(model.p), noise(model.p);
  for (int sweep = 0; sweep < cfg.burn_in + cfg.thin; ++sweep)
    detail::gibbs_sweep(model, g, rs, x, ctx_sum, noise);
  return x;
}

/// Diagnostics mode: after burn-in, retain every thin-th sweep `count` times.
/// Used by the distributional correctness tests only.
inline std::vector<Matrix> gibbs_retain(const EmbeddingModel& model, const ContextGraph& g,
                                        const GibbsConfig& cfg, int count) {
  if (cfg.burn_in < 0 || cfg.thin < 1) throw InputError("gibbs: bad burn_in/thin");
  if (count < 1) throw InputError("gibbs_retain: count must be positive");
  detail::check_gibbs_model(model, g);
  RandomStream rs(cfg.seed);
  Matrix x = Matrix::Zero(model.p, g.m());
  Vector ctx_sum(model.p), noise(model.p);
  for (int sweep = 0; sweep < cfg.burn_in; ++sweep)
    detail::gibbs_sweep(model, g, rs, x, ctx_sum, noise);
  std::vector<Matrix> retained;
  retained.reserve(count);
  for (int i = 0; i < count; ++i) {
    for (int t = 0; t < cfg.thin; ++t) detail::gibbs_sweep(model, g, rs, x, ctx_sum, noise);
    retained.push_back(x);
  }
  return retained;
}

/// Exact joint draw for the Sigma_j = I case: X_col = L^{-T} z with
/// L L^T = I - A (x) M, reshaped column-by-column to p x m.
inline Matrix exact_joint_sample(const EmbeddingModel& model, const ContextGraph& g,
                                 std::uint64_t seed, int cap = kDefaultMaterializeCap) {
  if (!model.sigmas.is_identity())
    throw InputError("exact_joint_sample: requires Sigma_j = I");
  const Matrix precision = detail::assemble_joint_precision(g, model.m_star, cap);
  const Matrix l = cholesky_spd(precision);
  RandomStream rs(seed);
  Vector z(l.rows());
  for (int i = 0; i < z.size(); ++i) z(i) = rs.normal();
  const Vector y = l.triangularView<Eigen::Lower>().transpose().solve(z);
  return Eigen::Map<const Matrix>(y.data(), model.p, g.m());
}

struct SplitSeeds {
  std::uint64_t train = 0;
  std::uint64_t val = 0;
  std::uint64_t test = 0;
};

struct Splits {
  Matrix train;
  Matrix val;
  Matrix test;
};

/// Three independent chains with distinct seeds and separate burn-in.
inline Splits make_splits(const EmbeddingModel& model, const ContextGraph& g,
                          const GibbsConfig& cfg, const SplitSeeds& seeds) {
  if (seeds.train == seeds.val || seeds.train == seeds.test || seeds.val == seeds.test)
    throw InputError("make_splits: split seeds must be pairwise distinct");
  auto with_seed = [&cfg](std::uint64_t s) {
    GibbsConfig c = cfg;
    c.seed = s;
    return c;
  };
  Splits out;
  out.train = gibbs_sample(model, g, with_seed(seeds.train));
  out.val = gibbs_sample(model, g, with_seed(seeds.val));
  out.test = gibbs_sample(model, g, with_seed(seeds.test));
  return out;
}

}  // namespace gembed
