/**
 * TrasoNET simulator.
 *
 * Analytic Hierarchy Process for network recommendation: pairwise comparison
 * matrices, principal-eigenvector priorities, consistency checking, and the
 * per-cell Cellular / VANET recommendation map.
 */
#ifndef TRASONET_AHP_HPP
#define TRASONET_AHP_HPP

#include "trasonet/scenario.hpp"

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

namespace trasonet
{

  /** Positive reciprocal matrix: a_ii = 1, a_ij = 1 / a_ji. */
  class ComparisonMatrix
  {
  public:
    static constexpr double kReciprocalTol = 1e-9;

    /** Row-major entries. Throws ValidationError unless square, positive and reciprocal. */
    ComparisonMatrix(std::size_t n, std::vector<double> entries);
    static ComparisonMatrix from_rows(const std::vector<std::vector<double>> &rows);
    /** a_ij = w_i / w_j, always perfectly consistent. */
    static ComparisonMatrix from_weights(std::span<const double> weights);

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  private:
    std::size_t n_;
    std::vector<double> a_;
  };

  struct PriorityVector
  {
    std::vector<double> weights;
    double lambda_max = 0.0;
    int iterations = 0;
  };

  struct ConsistencyReport
  {
    double lambda_max = 0.0;
    double ci = 0.0;
    double ri = 0.0;
    double cr = 0.0;
    bool acceptable = true;
  };

  /**
   * Principal right eigenvector by power iteration from the uniform vector
   * (or `start`), stopping at 1e-12 relative L1 change or 10,000 iterations,
   * normalized to sum 1.
   */
  PriorityVector priority_vector(const ComparisonMatrix &m, std::span<const double> start = {});

  /** Saaty random index for n in [1, 9]; throws ValidationError otherwise. */
  double random_index(std::size_t n);

  /** CR = CI / RI with CI = (lambda_max - n) / (n - 1); n <= 2 reports CR 0. Throws for n > 9. */
  ConsistencyReport consistency(const ComparisonMatrix &m);

  enum class Criterion
  {
    TrafficDensity = 0,
    Bandwidth = 1,
    Delay = 2,
    Cost = 3
  };
  inline constexpr int kCriterionCount = 4;

  /** Criterion comparison matrices per service (rows/cols in Criterion order). */
  ComparisonMatrix service_criteria_matrix(Service s);

  struct CellState
  {
    double vehicle_density = 0.0; /**< vehicles per metre of street */
    bool rsu_coverage = false;
    double cell_load = 0.0; /**< informational; not used by the judgment table */
  };

  /**
   * Saaty-scale judgment of VANET against Cellular for the traffic-density
   * criterion under RSU coverage: 5, 3, 1, 1/3, 1/5 for densities in
   * [0,0.01), [0.01,0.02), [0.02,0.04), [0.04,0.06), [0.06,inf) veh/m.
   */
  double density_judgment(double vehicles_per_m);

  /**
   * 2x2 comparison over {Cellular, VANET} for one criterion. Without RSU
   * coverage Cellular dominates at 9 on every criterion.
   */
  ComparisonMatrix score_alternatives(const CellState &cell, Criterion criterion);

  /** index(net) = sum_c weight(c) * priority(net | c), normalized over networks. */
  std::vector<double> synthesize(const PriorityVector &criteria_weights,
                                 std::span<const PriorityVector> per_criterion_alternatives);

  /** Full hierarchy for one cell and service: {Cellular, VANET} indices. */
  std::array<double, kNetworkCount> recommend_cell(const CellState &cell, Service service);

  struct RecommendationCell
  {
    int cell_x = 0;
    int cell_y = 0;
    Point centre;
    double density = 0.0;        /**< veh/m of street */
    double mean_speed_kmh = 0.0; /**< from the traffic estimate, NaN without segments */
    bool rsu_coverage = false;
    std::array<std::array<double, kNetworkCount>, kServiceCount> index{}; /**< [service][network] */
    std::array<NetworkOption, kServiceCount> best{};
  };

  struct RecommendationMap
  {
    double cell_size_m = 500.0;
    int nx = 0;
    int ny = 0;
    std::vector<RecommendationCell> cells; /**< row-major: cell_y * nx + cell_x */

    const RecommendationCell &at(Point p) const;
    const RecommendationCell &at(int cx, int cy) const
    {
      return cells.at(static_cast<std::size_t>(cy) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(cx));
    }
  };

  struct RecommendationInputs
  {
    const RoadNetwork &network;
    std::span<const VehicleState> vehicles;
    std::span<const Point> rsu_positions;
    double rsu_radius_m = 200.0;
    double cell_size_m = 500.0;
  };

  /**
   * Partition the map into square cells, measure vehicle density per street
   * metre from vehicle positions, average the latest column of the traffic
   * estimate over the cell's blocks, and run the hierarchy for both services.
   * A cell has RSU coverage when an RSU lies within rsu_radius of the cell.
   */
  RecommendationMap recommendation_map(const Eigen::MatrixXd &traffic_estimate, const RecommendationInputs &in);

  /** `cell_x,cell_y,service,network,index,argmax`, one row per cell, service and network. */
  void write_recommendation_csv(std::ostream &out, const RecommendationMap &map, std::span<const Service> services);

} // namespace trasonet

#endif // TRASONET_AHP_HPP
