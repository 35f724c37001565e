#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "unishrink/diagnostics.hpp"
#include "unishrink/errors.hpp"
#include "unishrink/precision_gibbs.hpp"
#include "unishrink/sim_bench.hpp"

using namespace unishrink;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SuffStats stats_from_identity_data(std::size_t p, std::size_t n, std::uint64_t seed) {
  return SuffStats::from_data(
      sample_data(Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)), n,
                  seed));
}

// Membership of (d1, d2, l21) in the feasible set of block (i, j), evaluated
// element by element from the recomposed Ω entries.
bool block_feasible(const ConstraintLedger& ledger, const GibbsState& s,
                    const BlockDecomposition& blk, double d1, double d2, double l21) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) return false;
  const std::size_t i = blk.first;
  const std::size_t j = blk.second;
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  const double w_ii = d1 + blk.b(0, 0);
  const double w_ij = d1 * l21 + blk.b(1, 0);
  const double w_jj = d1 * l21 * l21 + d2 + blk.b(1, 1);
  auto inside = [&](std::size_t r, std::size_t c, double w, double t) {
    const Interval a = ledger.allowed(r, c, s.tau, t);
    return w > a.lo && w < a.hi;
  };
  return inside(i, i, w_ii, s.scales(ii, ii)) && inside(i, j, w_ij, s.scales(ii, jj)) &&
         inside(j, j, w_jj, s.scales(jj, jj));
}

bool near_endpoint(double x, const std::vector<Interval>& parts, double step) {
  for (const auto& p : parts) {
    if (std::abs(x - p.lo) < step || std::abs(x - p.hi) < step) return true;
  }
  return false;
}

bool in_parts(double x, const std::vector<Interval>& parts) {
  for (const auto& p : parts) {
    if (x >= p.lo && x <= p.hi) return true;
  }
  return false;
}

// Grid scan of each conditional region against the brute-force predicate.
void scan_regions(const PrecisionSampler& sampler, const GibbsState& s, std::size_t i,
                  std::size_t j) {
  const ConstraintLedger& ledger = sampler.ledger();
  const BlockDecomposition blk = schur_block(s.omega, i, j);
  const BlockRegions regions = sampler.block_conditional_regions(s, i, j);
  ASSERT_TRUE(block_feasible(ledger, s, blk, blk.d1, blk.d2, blk.l21));

  auto scan = [&](const std::vector<Interval>& parts, double lo, double hi, auto&& feasible) {
    const int n = 20000;
    const double step = (hi - lo) / n;
    for (int k = 0; k <= n; ++k) {
      const double x = lo + step * k;
      if (near_endpoint(x, parts, 1e-9 * (1.0 + std::abs(x)))) continue;
      ASSERT_EQ(in_parts(x, parts), feasible(x)) << "x=" << x << " block (" << i << "," << j << ")";
    }
  };
  const double r1 = 5.0 * (blk.d1 + 1.0);
  scan({regions.d1}, 1e-6, r1, [&](double x) { return block_feasible(ledger, s, blk, x, blk.d2, blk.l21); });
  const double r2 = 5.0 * (blk.d2 + 1.0);
  scan({regions.d2}, 1e-6, r2, [&](double x) { return block_feasible(ledger, s, blk, blk.d1, x, blk.l21); });
  const double r3 = 5.0 * (std::abs(blk.l21) + 1.0);
  scan(regions.l21.intervals(), -r3, r3,
       [&](double x) { return block_feasible(ledger, s, blk, blk.d1, blk.d2, x); });
}

}  // namespace

TEST(BlockRegions, UnconstrainedLimit) {
  ConstraintLedger ledger(2);
  PrecisionSampler sampler(ledger, PriorSpec::exponential_power(1.0), FixedTau{1.0});
  Rng rng = make_stream(1);
  GibbsState s = sampler.initial_state(SuffStats::empty(2), std::nullopt, rng);
  s.scales.setConstant(kInf);
  const auto r = sampler.block_conditional_regions(s, 1, 0);
  EXPECT_EQ(r.d1.lo, 0.0);
  EXPECT_EQ(r.d1.hi, kInf);
  EXPECT_EQ(r.d2.lo, 0.0);
  EXPECT_EQ(r.d2.hi, kInf);
  ASSERT_EQ(r.l21.intervals().size(), 1u);
  EXPECT_EQ(r.l21.intervals()[0].lo, -kInf);
  EXPECT_EQ(r.l21.intervals()[0].hi, kInf);
}

TEST(BlockRegions, EqualScalesHandExample) {
  // b = 0, m = 0, τ = 1, all t = 2, l21 = 0, d2 = 1: only |d1| < 2 binds.
  ConstraintLedger ledger(2);
  PrecisionSampler sampler(ledger, PriorSpec::exponential_power(1.0), FixedTau{1.0});
  Rng rng = make_stream(2);
  GibbsState s = sampler.initial_state(SuffStats::empty(2), std::nullopt, rng);
  s.scales.setConstant(2.0);
  const auto r = sampler.block_conditional_regions(s, 1, 0);
  EXPECT_DOUBLE_EQ(r.d1.lo, 0.0);
  EXPECT_DOUBLE_EQ(r.d1.hi, 2.0);
  scan_regions(sampler, s, 1, 0);
}

TEST(BlockRegions, NegativeSignConstraintOnTheOffDiagonal) {
  ConstraintLedger ledger(2);
  ledger.constrain_edges_negative();
  PrecisionSampler sampler(ledger, PriorSpec::exponential_power(1.0), FixedTau{1.0});
  Rng rng = make_stream(3);
  GibbsState s = sampler.initial_state(SuffStats::empty(2), std::nullopt, rng);
  EXPECT_LT(s.omega(1, 0), 0.0);
  const auto r = sampler.block_conditional_regions(s, 1, 0);
  for (const auto& part : r.l21.intervals()) EXPECT_LE(part.hi, 0.0);
  scan_regions(sampler, s, 1, 0);
}

TEST(BlockRegions, GridScanOnRandomConstrainedStates) {
  // Centers, multipliers and boxes make the quadratic constraint on ω_jj
  // produce two-interval l21 regions.
  const std::size_t p = 4;
  ConstraintLedger ledger(p);
  Matrix centers = Matrix::Zero(4, 4);
  centers.diagonal() << 3.0, 2.5, 2.0, 3.5;
  centers(1, 0) = centers(0, 1) = -0.5;
  centers(3, 2) = centers(2, 3) = 0.4;
  ledger.set_centers(centers);
  ledger.set_multiplier(2, 0, 0.5);
  ledger.set_box(3, 1, {-kInf, 0.0});
  ledger.set_box(2, 2, {0.5, 6.0});
  PrecisionSampler sampler(ledger, PriorSpec::exponential_power(1.0), FixedTau{0.4});
  Rng rng = make_stream(4);
  GibbsState s = sampler.initial_state(stats_from_identity_data(p, 5, 44), centers, rng);
  int two_interval = 0;
  for (int sweep = 0; sweep < 30; ++sweep) {
    sampler.sweep(s, rng);
    for (const auto& [i, j] : ledger.graph().edges()) {
      scan_regions(sampler, s, i, j);
      if (sampler.block_conditional_regions(s, i, j).l21.intervals().size() == 2) ++two_interval;
    }
  }
  EXPECT_GT(two_interval, 0);
}

TEST(IsolatedDiagonal, UnconstrainedGammaMean) {
  ConstraintLedger ledger(3);
  ledger.set_graph(Graph(3));
  PrecisionSampler sampler(ledger, PriorSpec::exponential_power(1.0), FixedTau{1.0});
  Rng rng = make_stream(5);
  SuffStats stats = stats_from_identity_data(3, 8, 55);
  GibbsState s = sampler.initial_state(stats, std::nullopt, rng);
  s.scales.setConstant(kInf);
  const double shape = 0.5 * 8 + 1.0;
  const double rate = 0.5 * stats.s(1, 1);
  const int n = 100000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    sampler.sample_isolated_diag(s, 1, rng);
    sum += s.omega(1, 1);
  }
  const double se = std::sqrt(shape) / rate / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(sum / n, shape / rate, 3.0 * se);
  EXPECT_EQ(s.omega(1, 0), 0.0);
}

TEST(IsolatedDiagonal, TinyScalePinsTheDraw) {
  ConstraintLedger ledger(1);
  ledger.set_center(0, 0, 2.0);
  PrecisionSampler sampler(ledger, PriorSpec::exponential_power(1.0), FixedTau{1.0});
  Rng rng = make_stream(6);
  GibbsState s = sampler.initial_state(SuffStats::empty(1), Matrix::Constant(1, 1, 2.0), rng);
  s.scales(0, 0) = 1e-6;
  for (int k = 0; k < 1000; ++k) {
    sampler.sample_isolated_diag(s, 0, rng);
    ASSERT_GT(s.omega(0, 0), 2.0 - 1e-6);
    ASSERT_LT(s.omega(0, 0), 2.0 + 1e-6);
  }
}

TEST(LatentScales, FeasibleAndHalfCauchyAtCenters) {
  ConstraintLedger ledger(3);
  ledger.set_centers(Matrix::Identity(3, 3));
  PrecisionSampler sampler(ledger, PriorSpec::logarithmic(), FixedTau{1.0});
  Rng rng = make_stream(7);
  GibbsState s = sampler.initial_state(SuffStats::empty(3), Matrix::Identity(3, 3), rng);
  std::vector<double> draws;
  for (int k = 0; k < 20000; ++k) {
    sampler.sample_latent_scales(s, rng);
    ASSERT_TRUE(sampler.scales_feasible(s));
    draws.push_back(s.scales(1, 0));
  }
  // ω = m: t is half-Cauchy(0, 1).
  auto cdf = [](double x) { return 2.0 / std::numbers::pi * std::atan(x); };
  EXPECT_LT(oracle::ks_distance(draws, cdf), 0.015);
}

TEST(Sweep, OneDimensionalPosteriorMatchesQuadrature) {
  const double n = 10.0;
  const double s11 = 8.0;
  const auto spec = PriorSpec::exponential_power(1.0);
  const double tau = 0.7;
  ConstraintLedger ledger(1);
  ChainSettings settings;
  settings.iters = 42000;
  settings.burnin = 2000;
  settings.thin = 2;
  settings.seed = 8;
  const ChainResult chain =
      run_chain(SuffStats{Matrix::Constant(1, 1, s11), n}, ledger, spec, FixedTau{tau}, settings);
  std::vector<double> draws;
  for (const auto& d : chain.omega_draws) draws.push_back(d(0));
  auto dens = [&](double w) {
    return std::exp(0.5 * n * std::log(w) - 0.5 * s11 * w - w / tau);
  };
  const oracle::TabulatedCdf cdf(dens, 0.0, 30.0, 2000);
  EXPECT_LT(oracle::ks_distance(draws, [&](double x) { return cdf(x); }), 0.015);
}

TEST(Sweep, PreservesSpdAndLedgerOnRandomizedConfigurations) {
  Rng graph_rng = make_stream(9);
  for (int config = 0; config < 4; ++config) {
    const std::size_t p = 6 + static_cast<std::size_t>(config);
    ConstraintLedger ledger(p);
    Graph g(p);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 1; i < p; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (coin(graph_rng)) g.add_edge(i, j);
      }
    }
    ledger.set_graph(g);
    if (config % 2 == 1) ledger.constrain_edges_negative();
    TauHyperPrior hyper = HalfCauchyTau{1.0};
    if (config == 2) {
      Matrix centers = 2.0 * Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
      ledger.set_centers(centers);
      hyper = FixedTau{0.5};
    }
    SweepOptions options;
    options.verify_each_block = true;
    PrecisionSampler sampler(ledger, PriorSpec::logarithmic(), hyper, options);
    Rng rng = make_stream(100 + config);
    GibbsState s = sampler.initial_state(stats_from_identity_data(p, 20, 200 + config),
                                         std::nullopt, rng);
    for (int sweep = 0; sweep < 300; ++sweep) {
      sampler.sweep(s, rng);
      ASSERT_TRUE(ledger.satisfied_by(s.omega));
      ASSERT_TRUE(sampler.scales_feasible(s));
    }
    EXPECT_EQ(sampler.counters().spd_failures, 0u);
    EXPECT_EQ(sampler.counters().constraint_violations, 0u);
    EXPECT_EQ(sampler.counters().scale_violations, 0u);
    EXPECT_EQ(sampler.counters().block_updates, 300u * g.edge_count());
  }
}

TEST(Sweep, CompleteGraphTouchesEveryPair) {
  ConstraintLedger ledger(30);
  PrecisionSampler sampler(ledger, PriorSpec::exponential_power(1.0), FixedTau{1.0});
  Rng rng = make_stream(10);
  GibbsState s = sampler.initial_state(stats_from_identity_data(30, 40, 1), std::nullopt, rng);
  sampler.sweep(s, rng);
  EXPECT_EQ(sampler.counters().block_updates, 435u);
}

TEST(Sweep, RunningInverseAgreesWithFreshCholesky) {
  const std::size_t p = 8;
  ConstraintLedger ledger(p);
  PrecisionSampler sampler(ledger, PriorSpec::generalized_double_pareto(1.0), UniformOnTransform{});
  Rng rng = make_stream(11);
  GibbsState s = sampler.initial_state(stats_from_identity_data(p, 12, 3), std::nullopt, rng);
  const auto edges = ledger.graph().edges();
  for (int sweep = 0; sweep < 100; ++sweep) {
    s.resync();
    for (const auto& [i, j] : edges) {
      const auto fresh = schur_block(s.omega, i, j);
      const auto fast = s.inverse.block(s.omega, i, j);
      ASSERT_LT((fresh.b - fast.b).norm(), 1e-8 * (1.0 + fresh.b.norm()));
      ASSERT_NEAR(fresh.d1, fast.d1, 1e-8 * (1.0 + fresh.d1));
      ASSERT_NEAR(fresh.l21, fast.l21, 1e-8 * (1.0 + std::abs(fresh.l21)));
      sampler.sample_block(s, i, j, rng);
    }
    sampler.sample_global_scale(s, rng);
    sampler.sample_latent_scales(s, rng);
  }
}

TEST(Sweep, GraphZerosAreNeverTouched) {
  const std::size_t p = 5;
  ConstraintLedger ledger(p);
  Graph g(p);
  g.add_edge(1, 0);
  g.add_edge(3, 2);
  ledger.set_graph(g);
  PrecisionSampler sampler(ledger, PriorSpec::exponential_power(0.5), GammaOnInversePowerQ{1, 1});
  Rng rng = make_stream(12);
  GibbsState s = sampler.initial_state(stats_from_identity_data(p, 30, 4), std::nullopt, rng);
  for (int k = 0; k < 200; ++k) {
    sampler.sweep(s, rng);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (!g.has_edge(i, j)) {
          ASSERT_EQ(s.omega(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 0.0);
        }
      }
    }
  }
}

TEST(Sampler, RandomTauNeedsZeroCentersAndConeBoxes) {
  ConstraintLedger centered(2);
  centered.set_center(0, 0, 1.0);
  EXPECT_THROW(PrecisionSampler(centered, PriorSpec::logarithmic(), HalfCauchyTau{1.0}),
               InvalidSpec);
  EXPECT_NO_THROW(PrecisionSampler(centered, PriorSpec::logarithmic(), FixedTau{1.0}));
  ConstraintLedger boxed(2);
  boxed.set_box(1, 1, {0.5, 2.0});
  EXPECT_THROW(PrecisionSampler(boxed, PriorSpec::logarithmic(), HalfCauchyTau{1.0}), InvalidSpec);
}

TEST(RunChain, DeterministicUnderAFixedSeed) {
  ChainSettings settings;
  settings.iters = 300;
  settings.burnin = 100;
  settings.seed = 77;
  const auto stats = stats_from_identity_data(4, 10, 5);
  const auto a = run_chain(stats, ConstraintLedger(4), PriorSpec::logarithmic(), HalfCauchyTau{1},
                           settings);
  const auto b = run_chain(stats, ConstraintLedger(4), PriorSpec::logarithmic(), HalfCauchyTau{1},
                           settings);
  ASSERT_EQ(a.kept, 200u);
  for (std::size_t k = 0; k < a.kept; ++k) {
    ASSERT_EQ(a.omega_draws[k], b.omega_draws[k]);
    ASSERT_EQ(a.tau_draws[k], b.tau_draws[k]);
  }
}

TEST(RunChain, KeepsExactlyOneDrawAfterBurnin) {
  ChainSettings settings;
  settings.iters = 11;
  settings.burnin = 10;
  const auto r = run_chain(stats_from_identity_data(2, 5, 6), ConstraintLedger(2),
                           PriorSpec::exponential_power(1.0), FixedTau{1.0}, settings);
  EXPECT_EQ(r.kept, 1u);
  EXPECT_EQ(r.omega_draws.size(), 1u);
  settings.burnin = 11;
  EXPECT_THROW(run_chain(stats_from_identity_data(2, 5, 6), ConstraintLedger(2),
                         PriorSpec::exponential_power(1.0), FixedTau{1.0}, settings),
               ConfigError);
}

TEST(RunChain, WeakPriorRecoversTheMle) {
  const std::size_t n = 50;
  const auto stats = stats_from_identity_data(2, n, 7);
  ChainSettings settings;
  settings.iters = 22000;
  settings.burnin = 2000;
  settings.seed = 3;
  const auto r = run_chain(stats, ConstraintLedger(2), PriorSpec::exponential_power(1.0),
                           FixedTau{1e3}, settings);
  const Matrix mle = static_cast<double>(n) * spd_inverse(stats.s);
  EXPECT_LT(relative_frobenius(r.mean_omega, mle), 0.10);
}

TEST(RunChain, InitializationIndependence) {
  const std::size_t p = 3;
  const auto stats = stats_from_identity_data(p, 40, 8);
  ChainSettings settings;
  settings.iters = 21000;
  settings.burnin = 1000;
  std::vector<Matrix> means;
  std::vector<Matrix> ses;
  for (double scale : {1.0, 2.0}) {
    settings.initial_omega = scale * Matrix::Identity(3, 3);
    settings.seed = static_cast<std::uint64_t>(scale * 10);
    const auto r = run_chain(stats, ConstraintLedger(p), PriorSpec::generalized_double_pareto(1.0),
                             UniformOnTransform{}, settings);
    means.push_back(r.mean_omega);
    // Batch-means standard errors per element.
    Matrix se = Matrix::Zero(3, 3);
    const std::size_t batches = 50;
    const std::size_t len = r.kept / batches;
    for (Eigen::Index e = 0; e < 6; ++e) {
      std::vector<double> bm;
      for (std::size_t b = 0; b < batches; ++b) {
        double acc = 0.0;
        for (std::size_t k = b * len; k < (b + 1) * len; ++k) acc += r.omega_draws[k](e);
        bm.push_back(acc / static_cast<double>(len));
      }
      const double sd = standard_error(bm);
      const Matrix pos = from_lower_triangle(Vector::Unit(6, e), 3);
      se += sd * pos;
    }
    ses.push_back(se);
  }
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double combined = std::hypot(ses[0](i, j), ses[1](i, j));
      EXPECT_LT(std::abs(means[0](i, j) - means[1](i, j)), 3.0 * combined + 1e-12)
          << i << "," << j;
    }
  }
}

TEST(RunChain, LogarithmicPriorRecoversTridiagonalStructure) {
  ModelSpec model;
  model.id = 1;
  model.p = 10;
  const TruthModel truth = generate_truth(model);
  const auto stats = SuffStats::from_data(sample_data(truth.sigma, 100, 9));
  ChainSettings settings;
  settings.iters = 3000;
  settings.burnin = 1000;
  settings.store_draws = false;
  const auto r = run_chain(stats, ConstraintLedger(10), PriorSpec::logarithmic(), HalfCauchyTau{1},
                           settings);
  double zero_sum = 0.0, nonzero_sum = 0.0;
  int zero_n = 0, nonzero_n = 0;
  for (Eigen::Index i = 1; i < 10; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (i - j == 1) {
        nonzero_sum += std::abs(r.mean_omega(i, j));
        ++nonzero_n;
      } else {
        zero_sum += std::abs(r.mean_omega(i, j));
        ++zero_n;
      }
    }
  }
  EXPECT_LT(zero_sum / zero_n, 0.5 * nonzero_sum / nonzero_n);
}

TEST(RunChain, PriorOnlyRunWithoutData) {
  ConstraintLedger ledger(3);
  Matrix centers = Matrix::Identity(3, 3) * 2.0;
  centers(1, 0) = centers(0, 1) = -0.5;
  ledger.set_centers(centers);
  ledger.constrain_edges_negative();
  ChainSettings settings;
  settings.iters = 2000;
  settings.burnin = 100;
  settings.initial_omega = centers;
  const auto r = run_chain(SuffStats::empty(3), ledger, PriorSpec::exponential_power(1.0),
                           FixedTau{0.5}, settings);
  for (std::size_t k = 0; k < r.kept; ++k) {
    const Matrix omega = r.omega_draw(k);
    ASSERT_TRUE(ledger.satisfied_by(omega));
    ASSERT_TRUE(is_positive_definite(omega));
  }
}

TEST(Sweep, RebuiltEntriesStayInsideTinyBounds) {
  // The global scale collapses to ~1e-8 in the first sweep, so the allowed
  // half-widths are far below the rounding error of d1*l21 + b21.
  const TruthModel truth = generate_truth(ModelSpec{1, 30, -1.0, 1});
  ConstraintLedger ledger(30);
  ledger.set_graph(Graph::complete(30));
  SweepOptions options;
  options.verify_each_block = true;
  const NamedPrior& prior = benchmark_prior("ep_q0.2");
  PrecisionSampler sampler(ledger, prior.spec, prior.hyper, options);
  Rng rng = make_stream(31);
  GibbsState state =
      sampler.initial_state(SuffStats::from_data(sample_data(truth.sigma, 30, 5)), std::nullopt, rng);
  for (int s = 0; s < 5; ++s) sampler.sweep(state, rng);
  EXPECT_EQ(sampler.counters().scale_violations, 0u);
  EXPECT_EQ(sampler.counters().constraint_violations, 0u);
  EXPECT_EQ(sampler.counters().spd_failures, 0u);
}
