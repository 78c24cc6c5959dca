#include "trasonet/completion.hpp"

#include "trasonet/csv.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace trasonet
{

  InitialFill initialize_missing(const TrafficMatrix &matrix, double speed_limit)
  {
    const auto rows = static_cast<Eigen::Index>(matrix.rows());
    const auto cols = static_cast<Eigen::Index>(matrix.cols());
    InitialFill out;
    out.values = Eigen::MatrixXd::Zero(rows, cols);
    if (matrix.observed_count() == 0)
    {
      out.values.setConstant(speed_limit / 2.0);
      out.all_empty = rows > 0 && cols > 0;
      return out;
    }
    auto clamp = [&](double v) { return std::clamp(v, 0.0, speed_limit); };

    double global_sum = 0.0;
    std::size_t global_n = 0;
    std::vector<double> col_sum(matrix.cols(), 0.0);
    std::vector<int> col_n(matrix.cols(), 0);
    std::vector<bool> row_empty(matrix.rows(), true);

    for (std::size_t i = 0; i < matrix.rows(); ++i)
    {
      std::vector<std::size_t> seen;
      for (std::size_t j = 0; j < matrix.cols(); ++j)
        if (matrix.observed(i, j))
        {
          seen.push_back(j);
          col_sum[j] += matrix.value(i, j);
          ++col_n[j];
          global_sum += matrix.value(i, j);
          ++global_n;
        }
      if (seen.empty())
        continue;
      row_empty[i] = false;
      const auto r = static_cast<Eigen::Index>(i);
      for (std::size_t j : seen)
        out.values(r, static_cast<Eigen::Index>(j)) = matrix.value(i, j);
      for (std::size_t j = 0; j < seen.front(); ++j)
        out.values(r, static_cast<Eigen::Index>(j)) = clamp(matrix.value(i, seen.front()));
      for (std::size_t j = seen.back() + 1; j < matrix.cols(); ++j)
        out.values(r, static_cast<Eigen::Index>(j)) = clamp(matrix.value(i, seen.back()));
      for (std::size_t k = 0; k + 1 < seen.size(); ++k)
      {
        const std::size_t a = seen[k], b = seen[k + 1];
        const double va = matrix.value(i, a), vb = matrix.value(i, b);
        for (std::size_t j = a + 1; j < b; ++j)
        {
          const double t = static_cast<double>(j - a) / static_cast<double>(b - a);
          out.values(r, static_cast<Eigen::Index>(j)) = clamp(va + t * (vb - va));
        }
      }
    }

    const double global_mean = global_sum / static_cast<double>(global_n);
    for (std::size_t i = 0; i < matrix.rows(); ++i)
    {
      if (!row_empty[i])
        continue;
      for (std::size_t j = 0; j < matrix.cols(); ++j)
      {
        const double v = col_n[j] > 0 ? col_sum[j] / col_n[j] : global_mean;
        out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = clamp(v);
      }
    }
    return out;
  }

  namespace
  {
    struct Observed
    {
      std::vector<std::vector<Eigen::Index>> by_row;
      std::vector<std::vector<Eigen::Index>> by_col;
    };

    Observed index_observed(const TrafficMatrix &m)
    {
      Observed o;
      o.by_row.resize(m.rows());
      o.by_col.resize(m.cols());
      for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
          if (m.observed(i, j))
          {
            o.by_row[i].push_back(static_cast<Eigen::Index>(j));
            o.by_col[j].push_back(static_cast<Eigen::Index>(i));
          }
      return o;
    }

    /**
     * One half-sweep: for every line (row of `target`) with observations,
     * solve (F_S^T F_S + ridge I) t = F_S^T x_S where F is `fixed`.
     */
    template <typename ValueAt>
    void solve_lines(Eigen::MatrixXd &target, const Eigen::MatrixXd &fixed,
                     const std::vector<std::vector<Eigen::Index>> &lines, double ridge, ValueAt value_at)
    {
      const Eigen::Index k = fixed.cols();
      for (std::size_t line = 0; line < lines.size(); ++line)
      {
        const auto &idx = lines[line];
        if (idx.empty())
          continue;
        Eigen::MatrixXd gram = ridge * Eigen::MatrixXd::Identity(k, k);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
        for (Eigen::Index other : idx)
        {
          const auto f = fixed.row(other).transpose();
          gram.noalias() += f * f.transpose();
          rhs += value_at(line, other) * f;
        }
        target.row(static_cast<Eigen::Index>(line)) = gram.ldlt().solve(rhs).transpose();
      }
    }
  } // namespace

  CompletionResult complete_matrix(const TrafficMatrix &matrix, const CompletionParams &params)
  {
    params.validate(matrix.rows(), matrix.cols());
    const auto rank = static_cast<Eigen::Index>(params.target_rank);

    CompletionResult res;
    InitialFill init = initialize_missing(matrix, params.speed_max);
    res.all_empty = init.all_empty;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(init.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd root = svd.singularValues().head(rank).cwiseSqrt();
    Eigen::MatrixXd u = svd.matrixU().leftCols(rank) * root.asDiagonal();
    Eigen::MatrixXd v = svd.matrixV().leftCols(rank) * root.asDiagonal();
    Eigen::MatrixXd current = u * v.transpose();

    if (init.all_empty)
    {
      // A constant matrix is already rank one.
      current = init.values;
      res.converged = true;
    }
    else
    {
      const Observed obs = index_observed(matrix);
      for (int it = 1; it <= params.max_iterations; ++it)
      {
        solve_lines(u, v, obs.by_row, params.ridge, [&](std::size_t i, Eigen::Index j) {
          return matrix.value(i, static_cast<std::size_t>(j));
        });
        solve_lines(v, u, obs.by_col, params.ridge, [&](std::size_t j, Eigen::Index i) {
          return matrix.value(static_cast<std::size_t>(i), j);
        });
        Eigen::MatrixXd next = u * v.transpose();
        const double denom = std::max(current.norm(), 1e-300);
        const double change = (next - current).norm() / denom;
        current = std::move(next);
        res.iterations_used = it;
        if (change < params.convergence_tol)
        {
          res.converged = true;
          break;
        }
      }
    }

    res.low_rank = current;
    res.estimate = current.cwiseMax(params.speed_min).cwiseMin(params.speed_max);
    res.row_factors = std::move(u);
    res.col_factors = std::move(v);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < matrix.rows(); ++i)
      for (std::size_t j = 0; j < matrix.cols(); ++j)
        if (matrix.observed(i, j))
        {
          const double x = matrix.value(i, j);
          const double d = res.estimate(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - x;
          num += d * d;
          den += x * x;
        }
    res.fit_residual = den > 0 ? std::sqrt(num / den) : 0.0;
    return res;
  }

  double estimation_error(const Eigen::MatrixXd &estimate, const Eigen::MatrixXd &truth, const TrafficMatrix &mask)
  {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols() ||
        static_cast<std::size_t>(truth.rows()) != mask.rows() || static_cast<std::size_t>(truth.cols()) != mask.cols())
      throw ValidationError("estimation_error: shape mismatch");
    double sum = 0.0;
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < truth.rows(); ++i)
      for (Eigen::Index j = 0; j < truth.cols(); ++j)
        if (!mask.observed(static_cast<std::size_t>(i), static_cast<std::size_t>(j)))
        {
          sum += std::abs(estimate(i, j) - truth(i, j)) / std::max(truth(i, j), 1.0);
          ++n;
        }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
  }

  double relative_frobenius_error(const Eigen::MatrixXd &estimate, const Eigen::MatrixXd &truth,
                                  const TrafficMatrix &mask)
  {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols() ||
        static_cast<std::size_t>(truth.rows()) != mask.rows() || static_cast<std::size_t>(truth.cols()) != mask.cols())
      throw ValidationError("relative_frobenius_error: shape mismatch");
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < truth.rows(); ++i)
      for (Eigen::Index j = 0; j < truth.cols(); ++j)
        if (!mask.observed(static_cast<std::size_t>(i), static_cast<std::size_t>(j)))
        {
          const double d = estimate(i, j) - truth(i, j);
          num += d * d;
          den += truth(i, j) * truth(i, j);
        }
    return den > 0 ? std::sqrt(num / den) : 0.0;
  }

  Eigen::MatrixXd synthetic_low_rank(int rows, int cols, int rank, double speed_max, Rng &rng)
  {
    Eigen::MatrixXd a(rows, rank), b(cols, rank);
    for (Eigen::Index i = 0; i < a.size(); ++i)
      a.data()[i] = rng.uniform(0.2, 1.0);
    for (Eigen::Index i = 0; i < b.size(); ++i)
      b.data()[i] = rng.uniform(0.2, 1.0);
    return (speed_max / rank) * a * b.transpose();
  }

  TrafficMatrix sample_uniform(const Eigen::MatrixXd &truth, double rate, Rng &rng)
  {
    TrafficMatrix m(static_cast<std::size_t>(truth.rows()), static_cast<std::size_t>(truth.cols()));
    for (Eigen::Index i = 0; i < truth.rows(); ++i)
      for (Eigen::Index j = 0; j < truth.cols(); ++j)
        if (rng.bernoulli(rate))
          m.set(static_cast<std::size_t>(i), static_cast<std::size_t>(j), truth(i, j));
    return m;
  }

  TrafficMatrix observe(const Eigen::MatrixXd &truth, const TrafficMatrix &mask)
  {
    TrafficMatrix m(mask.rows(), mask.cols());
    for (std::size_t i = 0; i < mask.rows(); ++i)
      for (std::size_t j = 0; j < mask.cols(); ++j)
        if (mask.observed(i, j))
          m.set(i, j, truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    return m;
  }

  void write_estimate_csv(std::ostream &out, const Eigen::MatrixXd &estimate)
  {
    out << "segment_id";
    for (Eigen::Index j = 0; j < estimate.cols(); ++j)
      out << ",cycle_" << j;
    out << '\n';
    for (Eigen::Index i = 0; i < estimate.rows(); ++i)
    {
      out << i;
      for (Eigen::Index j = 0; j < estimate.cols(); ++j)
        out << ',' << csv::num(estimate(i, j));
      out << '\n';
    }
  }

  Eigen::MatrixXd read_estimate_csv(std::istream &in)
  {
    const auto rows = csv::lines(in);
    if (rows.empty())
      throw ValidationError("estimate CSV is empty");
    std::vector<std::vector<double>> data;
    for (std::size_t n = 0; n < rows.size(); ++n)
    {
      const auto f = csv::split(rows[n]);
      if (n == 0 && !f.empty() && f[0] == "segment_id")
        continue;
      std::vector<double> row;
      try
      {
        for (std::size_t k = 1; k < f.size(); ++k)
          row.push_back(std::stod(f[k]));
      }
      catch (const std::logic_error &)
      {
        throw ValidationError("estimate CSV: bad number on line " + std::to_string(n + 1));
      }
      if (!data.empty() && row.size() != data.front().size())
        throw ValidationError("estimate CSV: ragged rows");
      data.push_back(std::move(row));
    }
    if (data.empty())
      throw ValidationError("estimate CSV has no rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data.front().size()));
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t j = 0; j < data[i].size(); ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i][j];
    return m;
  }

} // namespace trasonet
