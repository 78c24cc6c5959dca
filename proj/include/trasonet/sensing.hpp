/**
 * TrasoNET simulator.
 *
 * Probe-vehicle traffic sensing: GPS reports, map matching, the road x
 * duty-cycle traffic matrix, sampling entropy and floating-car path planning.
 */
#ifndef TRASONET_SENSING_HPP
#define TRASONET_SENSING_HPP

#include "trasonet/scenario.hpp"

#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace trasonet
{

  struct GpsReport
  {
    VehicleId vehicle_id = 0;
    int cycle_index = 0;
    Point position;
    double speed_kmh = 0.0;
    Point heading;
  };

  /**
   * Roads x duty cycles grid of average speeds. Unobserved cells hold NaN and
   * must be checked against the mask before use.
   */
  class TrafficMatrix
  {
  public:
    static constexpr double kUnobserved = std::numeric_limits<double>::quiet_NaN();

    TrafficMatrix() = default;
    TrafficMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), values_(rows * cols, kUnobserved), mask_(rows * cols, 0)
    {
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    bool observed(std::size_t i, std::size_t j) const { return mask_[i * cols_ + j] != 0; }
    double value(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

    void set(std::size_t i, std::size_t j, double v)
    {
      values_[i * cols_ + j] = v;
      mask_[i * cols_ + j] = 1;
    }
    void clear(std::size_t i, std::size_t j)
    {
      values_[i * cols_ + j] = kUnobserved;
      mask_[i * cols_ + j] = 0;
    }

    /** Number of observed cycles in row i. */
    int row_count(std::size_t i) const;
    std::size_t observed_count() const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
    std::vector<unsigned char> mask_;
  };

  /** One report per probe vehicle and floating car; regular vehicles are silent. */
  std::vector<GpsReport> emit_reports(std::span<const VehicleState> vehicles, int cycle_index);

  inline constexpr double kCaptureRadiusM = 50.0;

  /**
   * Segment minimizing the perpendicular distance to the report position;
   * ties go to the lowest id. nullopt when nothing lies within the capture radius.
   */
  std::optional<SegmentId> map_match(const GpsReport &report, const RoadNetwork &network,
                                     double capture_radius_m = kCaptureRadiusM);

  /**
   * x_ij is the mean speed of the reports matched to segment i in cycle j.
   * Unmatched reports and reports outside [0, horizon) are dropped.
   */
  TrafficMatrix build_traffic_matrix(std::span<const GpsReport> reports, const RoadNetwork &network,
                                     int horizon_cycles);

  struct Coverage
  {
    double road = 0.0; /**< fraction of rows with at least one observation */
    double time = 0.0; /**< mean observed-cycle fraction over covered rows */
  };

  Coverage coverage_stats(const TrafficMatrix &matrix);

  /**
   * Shannon entropy, in nats, of the histogram of per-row observation counts.
   * Rows that all share one count give 0.
   */
  double average_entropy(const TrafficMatrix &matrix);
  double count_entropy(std::span<const int> row_counts);

  struct FcPlanOptions
  {
    std::vector<SegmentId> start_segments; /**< one per floating car; spread evenly when empty */
    std::vector<VehicleId> vehicle_ids;    /**< defaults to 0..n_fc-1 */
    int start_cycle = 0;
  };

  /**
   * Greedy count balancing: each cycle every floating car moves to the
   * adjacent block whose row has the fewest observations so far (its own
   * visits included). Ties keep the car going straight when possible and
   * otherwise go to the lowest segment id.
   */
  FcRoutePlan plan_fc_routes(int n_fc, const TrafficMatrix &observed_so_far, const RoadNetwork &network,
                             int horizon, const FcPlanOptions &options = {});

  /** Unplanned patrol: uniform random walk over adjacent blocks, same shape as a plan. */
  FcRoutePlan random_fc_routes(int n_fc, const RoadNetwork &network, int horizon, Rng &rng,
                               const FcPlanOptions &options = {});

  /** Mark the cells a plan visits as observed (value supplied by `speed_of`). */
  template <typename SpeedOf>
  void apply_plan(TrafficMatrix &m, const FcRoutePlan &plan, SpeedOf &&speed_of)
  {
    for (const auto &route : plan.routes)
      for (std::size_t k = 0; k < route.segments.size(); ++k)
      {
        const int j = plan.start_cycle + static_cast<int>(k);
        const auto i = static_cast<std::size_t>(route.segments[k]);
        if (j >= 0 && static_cast<std::size_t>(j) < m.cols() && !m.observed(i, static_cast<std::size_t>(j)))
          m.set(i, static_cast<std::size_t>(j), speed_of(i, static_cast<std::size_t>(j)));
      }
  }

  // CSV export. Header rows, %.6f numbers, LF endings.
  void write_reports_csv(std::ostream &out, std::span<const GpsReport> reports);
  std::vector<GpsReport> read_reports_csv(std::istream &in);
  void write_matrix_values_csv(std::ostream &out, const TrafficMatrix &m);
  void write_matrix_mask_csv(std::ostream &out, const TrafficMatrix &m);

} // namespace trasonet

#endif // TRASONET_SENSING_HPP
