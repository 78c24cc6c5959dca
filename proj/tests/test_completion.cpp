#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "trasonet/completion.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

using namespace trasonet;

namespace
{
  TrafficMatrix row_matrix(std::initializer_list<double> values)
  {
    TrafficMatrix m(1, values.size());
    std::size_t j = 0;
    for (double v : values)
    {
      if (!std::isnan(v))
        m.set(0, j, v);
      ++j;
    }
    return m;
  }

  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  double observed_residual(const Eigen::MatrixXd &est, const Eigen::MatrixXd &truth, const TrafficMatrix &mask)
  {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < mask.rows(); ++i)
      for (std::size_t j = 0; j < mask.cols(); ++j)
        if (mask.observed(i, j))
        {
          const double d = est(i, j) - truth(i, j);
          num += d * d;
          den += truth(i, j) * truth(i, j);
        }
    return std::sqrt(num / den);
  }
} // namespace

TEST_CASE("initialization: interpolation, edge fill, clamping")
{
  auto r = initialize_missing(row_matrix({20, kNaN, 40}), 80);
  CHECK(r.values(0, 1) == doctest::Approx(30));
  r = initialize_missing(row_matrix({kNaN, kNaN, 50}), 80);
  CHECK(r.values(0, 0) == 50);
  CHECK(r.values(0, 1) == 50);
  r = initialize_missing(row_matrix({70, kNaN, 110}), 80);
  CHECK(r.values(0, 1) == 80); // 90 clamped
  CHECK(r.values(0, 2) == 110); // observed values are kept
  CHECK_FALSE(r.all_empty);
}

TEST_CASE("initialization: empty rows take the column mean; empty matrix is flagged")
{
  TrafficMatrix m(3, 2);
  m.set(0, 0, 10);
  m.set(1, 0, 30);
  m.set(1, 1, 50);
  const auto r = initialize_missing(m, 80);
  CHECK(r.values(2, 0) == doctest::Approx(20));
  CHECK(r.values(2, 1) == doctest::Approx(50));

  const auto e = initialize_missing(TrafficMatrix(4, 5), 80);
  CHECK(e.all_empty);
  CHECK((e.values.array() == 40.0).all());
}

TEST_CASE("rank-2 completion at 30% sampling")
{
  double total = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
  {
    Rng tr = Rng::stream(seed, "truth"), sr = Rng::stream(seed, "sampling");
    const auto truth = synthetic_low_rank(100, 96, 2, 80, tr);
    const auto observed = sample_uniform(truth, 0.3, sr);
    CompletionParams p;
    p.target_rank = 2;
    const auto res = complete_matrix(observed, p);
    total += relative_frobenius_error(res.estimate, truth, observed);
  }
  CHECK(total / 5 < 0.05);
}

TEST_CASE("fully observed input is reproduced")
{
  Rng tr(3);
  const auto truth = synthetic_low_rank(30, 20, 3, 80, tr);
  TrafficMatrix full(30, 20);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 20; ++j)
      full.set(i, j, truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  CompletionParams p;
  p.target_rank = 3;
  const auto res = complete_matrix(full, p);
  CHECK(res.converged);
  CHECK(res.fit_residual < p.convergence_tol);
  CHECK((res.estimate - truth).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("observed-entry residual is no worse than the truncated SVD of the oracle")
{
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
  {
    Rng tr = Rng::stream(seed, "truth"), nr = Rng::stream(seed, "noise"), sr = Rng::stream(seed, "sampling");
    Eigen::MatrixXd truth = synthetic_low_rank(60, 50, 3, 80, tr);
    for (Eigen::Index i = 0; i < truth.rows(); ++i)
      for (Eigen::Index j = 0; j < truth.cols(); ++j)
        truth(i, j) = std::clamp(truth(i, j) + 2.0 * nr.normal(), 0.0, 80.0);
    const auto observed = sample_uniform(truth, 0.5, sr);

    Eigen::BDCSVD<Eigen::MatrixXd> svd(truth, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd oracle = svd.matrixU().leftCols(3) * svd.singularValues().head(3).asDiagonal() *
                                   svd.matrixV().leftCols(3).transpose();

    CompletionParams p;
    p.target_rank = 3;
    const auto res = complete_matrix(observed, p);
    CHECK(observed_residual(res.low_rank, truth, observed) <=
          observed_residual(oracle, truth, observed) + p.convergence_tol);
    CHECK(res.fit_residual == doctest::Approx(observed_residual(res.estimate, truth, observed)).epsilon(1e-9));
  }
}

TEST_CASE("estimate is bounded, low rank before clamping, and deterministic")
{
  Rng tr(7), sr(8);
  Eigen::MatrixXd truth = synthetic_low_rank(50, 40, 4, 80, tr);
  truth(0, 0) = 80; // sits at the bound
  const auto observed = sample_uniform(truth, 0.4, sr);
  CompletionParams p;
  const auto a = complete_matrix(observed, p);
  const auto b = complete_matrix(observed, p);
  CHECK(a.estimate.minCoeff() >= 0.0);
  CHECK(a.estimate.maxCoeff() <= 80.0);
  CHECK(a.estimate == b.estimate);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.low_rank);
  const auto &s = svd.singularValues();
  for (Eigen::Index k = p.target_rank; k < s.size(); ++k)
    CHECK(s(k) < 1e-8 * s(0));
}

TEST_CASE("invalid parameters throw; non-convergence does not")
{
  TrafficMatrix m(5, 4);
  m.set(0, 0, 10);
  CompletionParams p;
  p.target_rank = 5;
  CHECK_THROWS_AS(complete_matrix(m, p), ConfigError);
  p.target_rank = 0;
  CHECK_THROWS_AS(complete_matrix(m, p), ConfigError);
  p.target_rank = 2;
  p.convergence_tol = 0;
  CHECK_THROWS_AS(complete_matrix(m, p), ConfigError);

  Rng tr(1), sr(2);
  const auto truth = synthetic_low_rank(40, 40, 4, 80, tr);
  CompletionParams one;
  one.max_iterations = 1;
  one.convergence_tol = 1e-15;
  const auto res = complete_matrix(sample_uniform(truth, 0.2, sr), one);
  CHECK_FALSE(res.converged);
  CHECK(res.iterations_used == 1);
}

TEST_CASE("all-empty input")
{
  const auto res = complete_matrix(TrafficMatrix(6, 5), CompletionParams{});
  CHECK(res.all_empty);
  CHECK((res.estimate.array() == 40.0).all());
}

TEST_CASE("estimation error")
{
  Eigen::MatrixXd truth(2, 2);
  truth << 10, 20, 30, 40;
  TrafficMatrix mask(2, 2);
  mask.set(0, 0, 10);
  CHECK(estimation_error(truth, truth, mask) == 0.0);
  CHECK(estimation_error(1.1 * truth, truth, mask) == doctest::Approx(0.1));
  TrafficMatrix full(2, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      full.set(i, j, 1);
  CHECK(estimation_error(2 * truth, truth, full) == 0.0);
  Eigen::MatrixXd slow = Eigen::MatrixXd::Constant(2, 2, 0.5);
  CHECK(estimation_error(slow + Eigen::MatrixXd::Constant(2, 2, 0.5), slow, mask) == doctest::Approx(0.5));
}

TEST_CASE("error falls as the sample rate rises")
{
  const double rates[] = {0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> errs;
  for (double rate : rates)
  {
    double e = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
    {
      Rng tr = Rng::stream(seed, "truth"), sr = Rng::stream(seed, "sampling");
      const auto truth = synthetic_low_rank(100, 96, 4, 80, tr);
      const auto observed = sample_uniform(truth, rate, sr);
      e += estimation_error(complete_matrix(observed, CompletionParams{}).estimate, truth, observed);
    }
    errs.push_back(e / 3);
  }
  for (std::size_t k = 1; k < errs.size(); ++k)
    CHECK(errs[k] <= errs[k - 1] + 1e-6);
}

TEST_CASE("estimate CSV round trip")
{
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4.5, 5, 6;
  std::stringstream ss;
  write_estimate_csv(ss, m);
  const auto back = read_estimate_csv(ss);
  CHECK(back == m);
  std::istringstream bad("segment_id,c0\n0,abc\n");
  CHECK_THROWS_AS(read_estimate_csv(bad), ValidationError);
}
