#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "unishrink/errors.hpp"
#include "unishrink/sim_bench.hpp"

using namespace unishrink;

TEST(GenerateTruth, ModelOneInverseIsTridiagonal) {
  ModelSpec spec;
  spec.id = 1;
  spec.p = 3;
  const auto truth = generate_truth(spec);
  EXPECT_NEAR(truth.omega(0, 0), 1.0 / 0.51, 1e-12);
  EXPECT_NEAR(truth.omega(2, 2), 1.0 / 0.51, 1e-12);
  EXPECT_NEAR(truth.omega(1, 1), 1.49 / 0.51, 1e-12);
  EXPECT_NEAR(truth.omega(1, 0), -0.7 / 0.51, 1e-12);
  EXPECT_NEAR(truth.omega(2, 0), 0.0, 1e-12);
  EXPECT_NEAR(truth.omega(1, 1), 2.921569, 1e-6);
}

TEST(GenerateTruth, ModelTwoBands) {
  ModelSpec spec;
  spec.id = 2;
  spec.p = 6;
  const auto truth = generate_truth(spec);
  EXPECT_EQ(truth.omega(0, 0), 1.0);
  EXPECT_EQ(truth.omega(1, 0), 0.2);
  EXPECT_EQ(truth.omega(3, 0), 0.2);
  EXPECT_EQ(truth.omega(4, 0), 0.1);  // ω_15 in one-based indexing
  EXPECT_EQ(truth.omega(5, 0), 0.0);  // ω_16
}

TEST(GenerateTruth, SparseModelsHaveConditionNumberP) {
  for (int id : {3, 4}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      ModelSpec spec;
      spec.id = id;
      spec.p = 30;
      spec.seed = seed;
      const auto truth = generate_truth(spec);
      const auto ev = extremal_eigenvalues(truth.omega);
      EXPECT_NEAR(ev.max / ev.min, 30.0, 1e-6);
      for (Eigen::Index i = 0; i < 30; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
          const double w = truth.omega(i, j);
          ASSERT_TRUE(w == 0.0 || w == 0.5);
        }
      }
    }
  }
}

TEST(GenerateTruth, AllModelsSpdOverManySeeds) {
  for (int id = 1; id <= 4; ++id) {
    for (std::size_t p : {10u, 30u}) {
      for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        ModelSpec spec{id, p, -1.0, seed};
        const auto truth = generate_truth(spec);
        ASSERT_TRUE(is_positive_definite(truth.omega)) << id << " " << p << " " << seed;
        ASSERT_TRUE(is_positive_definite(truth.sigma));
        if (id <= 2) break;  // deterministic models
      }
    }
  }
  EXPECT_THROW(generate_truth(ModelSpec{5, 10, -1.0, 1}), InvalidSpec);
}

TEST(SampleData, EmptyAndDeterministic) {
  const Matrix s = Matrix::Identity(3, 3);
  EXPECT_EQ(sample_data(s, 0, 1).cols(), 0);
  EXPECT_EQ(sample_data(s, 10, 42), sample_data(s, 10, 42));
  EXPECT_NE(sample_data(s, 10, 42), sample_data(s, 10, 43));
}

TEST(SampleData, SampleCovarianceConverges) {
  const std::size_t n = 20000;
  const Matrix y = sample_data(Matrix::Identity(4, 4), n, 5);
  const Matrix cov = y * y.transpose() / static_cast<double>(n);
  EXPECT_LT(relative_frobenius(cov, Matrix::Identity(4, 4)), 3.0 / std::sqrt(double(n)));
}

TEST(Losses, HandComputedValues) {
  const Matrix i2 = Matrix::Identity(2, 2);
  EXPECT_NEAR(stein_loss(i2, i2), 0.0, 1e-15);
  EXPECT_NEAR(squared_loss(i2, i2), 0.0, 1e-15);
  EXPECT_NEAR(stein_loss(2.0 * i2, i2), 4.0 - 2.0 * std::log(2.0) - 2.0, 1e-14);
  EXPECT_NEAR(stein_loss(2.0 * i2, i2), 0.613706, 1e-6);
  EXPECT_NEAR(squared_loss(2.0 * i2, i2), 2.0, 1e-15);
  EXPECT_GT(std::abs(stein_loss(2.0 * i2, i2) - stein_loss(i2, 2.0 * i2)), 0.1);
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  EXPECT_THROW(stein_loss(bad, i2), NotPositiveDefinite);
}

TEST(Losses, NonNegativeAndMinimizedAtTruth) {
  Rng rng = make_stream(7);
  ModelSpec spec{1, 5, -1.0, 1};
  const Matrix truth = generate_truth(spec).sigma;
  for (int k = 0; k < 50; ++k) {
    Matrix e(5, 5);
    for (Eigen::Index i = 0; i < 5; ++i) {
      for (Eigen::Index j = 0; j < 5; ++j) e(i, j) = standard_normal(rng);
    }
    Matrix sym = e + e.transpose();
    double prev = 0.0;
    for (double h : {1e-3, 1e-2, 5e-2}) {
      const Matrix est = truth + h * sym;
      if (!is_positive_definite(est)) break;
      const double l1 = stein_loss(est, truth);
      EXPECT_GE(l1, 0.0);
      EXPECT_GT(l1, prev);
      EXPECT_GE(squared_loss(est, truth), 0.0);
      prev = l1;
    }
  }
}

TEST(BayesEstimators, SingleAndScalarDraws) {
  Matrix w(2, 2);
  w << 2, -0.5, -0.5, 1;
  const auto single = bayes_estimators(std::vector<Matrix>{w});
  EXPECT_LT((single.sigma_l1 - spd_inverse(w)).norm(), 1e-14);
  EXPECT_LT((single.sigma_l2 - spd_inverse(w)).norm(), 1e-14);
  const auto two = bayes_estimators(
      std::vector<Matrix>{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 3.0)});
  EXPECT_NEAR(two.sigma_l1(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(two.sigma_l2(0, 0), 2.0 / 3.0, 1e-15);
  const auto same = bayes_estimators(std::vector<Matrix>{w, w, w});
  EXPECT_LT((same.sigma_l1 - same.sigma_l2).norm(), 1e-14);
  EXPECT_THROW(bayes_estimators(std::vector<Matrix>{}), InvalidSpec);
}

TEST(BayesEstimators, DistinctDrawsSeparateTheEstimators) {
  Rng rng = make_stream(8);
  std::vector<Matrix> draws;
  for (int k = 0; k < 5; ++k) {
    Matrix a(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) a(i, j) = standard_normal(rng);
    }
    draws.push_back(a * a.transpose() + Matrix::Identity(3, 3));
  }
  const auto est = bayes_estimators(draws);
  EXPECT_GT((est.sigma_l1 - est.sigma_l2).norm(), 1e-3);
}

TEST(Bench, ReplicateRowAndCsvSchema) {
  ModelSpec model{1, 5, -1.0, 3};
  const auto truth = generate_truth(model);
  ChainSettings settings;
  settings.iters = 300;
  settings.burnin = 100;
  const auto row = run_bench_replicate(model, truth, 20, benchmark_prior("log"), 0, settings);
  EXPECT_TRUE(std::isfinite(row.l1));
  EXPECT_TRUE(std::isfinite(row.l2));
  std::ostringstream out;
  write_bench_header(out);
  write_bench_row(out, row);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "model,p,n,prior,replicate,L1,L2,runtime_seconds");
  EXPECT_NE(out.str().find("1,5,20,log,0,"), std::string::npos);
  EXPECT_THROW(benchmark_prior("horseshoe"), InvalidSpec);
}
