/**
 * TrasoNET simulator.
 *
 * Traffic estimation for un-sampled roads in two steps: fill gaps from
 * temporal continuity and the speed bound, then fit a fixed-rank
 * factorization to the observed entries by alternating least squares.
 */
#ifndef TRASONET_COMPLETION_HPP
#define TRASONET_COMPLETION_HPP

#include "trasonet/config.hpp"
#include "trasonet/rng.hpp"
#include "trasonet/sensing.hpp"

#include <Eigen/Dense>

#include <iosfwd>

namespace trasonet
{

  struct InitialFill
  {
    Eigen::MatrixXd values;
    bool all_empty = false; /**< nothing observed; every entry is speed_limit / 2 */
  };

  /**
   * Per row, interpolate linearly in time between observed neighbours and
   * extend the first/last observation to the edges. Empty rows take the
   * column mean over observed rows (the global mean for empty columns).
   * Filled values are clamped to [0, speed_limit]; observed ones are kept.
   */
  InitialFill initialize_missing(const TrafficMatrix &matrix, double speed_limit);

  struct CompletionResult
  {
    Eigen::MatrixXd estimate;  /**< clamped to the speed bounds */
    Eigen::MatrixXd low_rank;  /**< U * V^T before clamping */
    Eigen::MatrixXd row_factors;
    Eigen::MatrixXd col_factors;
    int iterations_used = 0;
    bool converged = false;
    double fit_residual = 0.0; /**< relative Frobenius error on observed entries */
    bool all_empty = false;
  };

  /**
   * Alternating least squares for X ~ U V^T of rank params.target_rank,
   * started from the truncated SVD of initialize_missing(). Each half-sweep
   * solves a ridge-regularized least-squares problem per row (column) over
   * its observed entries; rows or columns with no observation keep their
   * initial factors. Stops when the relative change of U V^T drops below
   * convergence_tol. Throws ConfigError for invalid params.
   */
  CompletionResult complete_matrix(const TrafficMatrix &matrix, const CompletionParams &params);

  /** Mean |est - true| / max(true, 1 km/h) over unobserved entries; 0 when none. */
  double estimation_error(const Eigen::MatrixXd &estimate, const Eigen::MatrixXd &truth, const TrafficMatrix &mask);

  /** ||est - true||_F / ||true||_F restricted to unobserved entries; 0 when none. */
  double relative_frobenius_error(const Eigen::MatrixXd &estimate, const Eigen::MatrixXd &truth,
                                  const TrafficMatrix &mask);

  /** Exact rank-r matrix (speed_max / r) * A B^T with A, B entries uniform in [0.2, 1]. */
  Eigen::MatrixXd synthetic_low_rank(int rows, int cols, int rank, double speed_max, Rng &rng);

  /** Observe each entry of `truth` independently with probability `rate`. */
  TrafficMatrix sample_uniform(const Eigen::MatrixXd &truth, double rate, Rng &rng);

  /** Copy of `truth` restricted to the cells observed in `mask`. */
  TrafficMatrix observe(const Eigen::MatrixXd &truth, const TrafficMatrix &mask);

  void write_estimate_csv(std::ostream &out, const Eigen::MatrixXd &estimate);
  Eigen::MatrixXd read_estimate_csv(std::istream &in);

} // namespace trasonet

#endif // TRASONET_COMPLETION_HPP
