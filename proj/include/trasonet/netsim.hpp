/**
 * TrasoNET simulator.
 *
 * Cellular / VANET capacity model and the end-to-end duty-cycle simulation
 * comparing cellular-only access against recommender-driven access.
 */
#ifndef TRASONET_NETSIM_HPP
#define TRASONET_NETSIM_HPP

#include "trasonet/access.hpp"
#include "trasonet/ahp.hpp"
#include "trasonet/config.hpp"
#include "trasonet/scenario.hpp"

#include <array>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace trasonet
{

  enum class SimMode
  {
    Baseline,
    TrasoNET
  };
  std::string_view to_string(SimMode m);
  SimMode parse_mode(std::string_view s);

  struct Infrastructure
  {
    std::vector<Point> enbs;
    std::vector<Point> rsus;
  };

  /** eNBs at the centres of a grid of roughly enb_grid_spacing_m squares covering the map. */
  std::vector<Point> deploy_enbs(const NetworkParams &params, double width, double height);

  /**
   * Explicit rsu_positions when given; otherwise one RSU every rsu_spacing_m
   * along every street, kept only within rsu_sp_range_m of a social spot.
   * Duplicates at crossings are removed.
   */
  std::vector<Point> deploy_rsus(const NetworkParams &params, const RoadNetwork &network,
                                 std::span<const Point> social_spots);

  Infrastructure deploy_infrastructure(const ScenarioConfig &config, const RoadNetwork &network);

  /** Nearest eNB; ties go to the lowest index. Throws ValidationError with no eNB. */
  int nearest_enb(Point p, std::span<const Point> enbs);
  /** Nearest RSU within radius_m; ties go to the lowest index. */
  std::optional<int> nearest_rsu(Point p, std::span<const Point> rsus, double radius_m);

  /** Max-min fair (water-filling) split of `capacity` over `demands`. */
  std::vector<double> max_min_share(std::span<const double> demands, double capacity);

  struct Attachment
  {
    NetworkOption network = NetworkOption::Cellular;
    int node = 0; /**< eNB or RSU index */
    double demand_mbps = 0.0;
  };

  struct LinkOutcome
  {
    double rate_mbps = 0.0;
    double delay_ms = 0.0; /**< +inf for a saturated cell */
  };

  /**
   * Per-session achieved rate and delay. Each node's capacity is shared
   * max-min fair over its sessions. VANET delay is vanet_delay_per_user_ms
   * times the sessions on the RSU; cellular delay is cellular_base_delay_ms,
   * scaled by 1 / (1 - offered load / capacity) when cellular_queueing_delay
   * is set.
   */
  std::vector<LinkOutcome> allocate_capacity(std::span<const Attachment> attachments, const Infrastructure &infra,
                                             const NetworkParams &params);

  /** Per-vehicle VANET billing state for one simulated period. */
  struct VanetAccount
  {
    bool subscribed = false;
    double used_mb = 0.0;
  };

  struct Charge
  {
    double flat = 0.0;     /**< RMB; the VANET subscription, once per vehicle */
    double marginal = 0.0; /**< RMB */
    double total() const { return flat + marginal; }
  };

  /**
   * Cellular: price per Mb. VANET: the flat price on first use, then free up
   * to the data cap and cellular pricing beyond it. Throws ValidationError for
   * negative volume.
   */
  Charge accrue_cost(NetworkOption network, double megabits, VanetAccount &account, const NetworkParams &params);

  /** min(1, rate / demand) * min(1, bound / delay), in [0, 1]. */
  double achieved_qos(const LinkOutcome &link, double demand_mbps, double delay_bound_ms);

  struct DensityBin
  {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    long sessions = 0;
    long successes = 0;
    double success_probability() const
    {
      return sessions > 0 ? static_cast<double>(successes) / static_cast<double>(sessions) : 1.0;
    }
  };

  /** Bin edges 0, 0.01, ..., 0.10 veh/m plus an open [0.10, inf) bin. */
  std::vector<DensityBin> make_density_bins();

  struct ServiceMetrics
  {
    long sessions = 0;
    long successes = 0;
    double success_probability = 1.0;
    bool no_sessions = true; /**< success_probability is vacuous */
    double total_mb = 0.0;
    double vanet_mb = 0.0;
    double offload_fraction = 0.0;
    double total_cost = 0.0;
    double mean_cost = 0.0;
    long handovers = 0;
    std::vector<DensityBin> bins = make_density_bins();
  };

  struct CycleRecord
  {
    int cycle = 0;
    Service service = Service::Voice;
    double success = 1.0; /**< fraction of active sessions whose QoS was met this cycle */
    double offload = 0.0; /**< VANET share of this cycle's volume */
    double cost = 0.0;    /**< RMB charged this cycle */
    int handovers = 0;
  };

  struct SimMetrics
  {
    SimMode mode = SimMode::Baseline;
    std::uint64_t seed = 0;
    int cycles = 0;
    int n_enbs = 0;
    int n_rsus = 0;
    std::array<ServiceMetrics, kServiceCount> services{};
    std::vector<CycleRecord> series;

    const ServiceMetrics &operator[](Service s) const { return services[static_cast<std::size_t>(s)]; }
  };

  /**
   * Duty-cycle loop: step mobility, collect probe and floating-car reports,
   * and every refresh_cycles rebuild the traffic matrix, complete it, refresh
   * the recommendation map and replan the floating cars. Idle vehicles start
   * sessions as a Poisson process. Baseline keeps every session on cellular;
   * TrasoNET starts on the recommended network and lets each vehicle's access
   * engine decide handovers. Capacity is then allocated, QoS recorded, and the
   * engines learn. A session succeeds when rate and delay are met in at least
   * success_fraction of its cycles; sessions still running at the horizon are
   * judged on the cycles they had. Deterministic per (config, seed); both
   * modes see the same mobility and session arrivals. Throws
   * InvariantViolation when capacity, attachment or containment checks fail.
   */
  SimMetrics run_simulation(const ScenarioConfig &config, SimMode mode);

  nlohmann::json metrics_to_json(const SimMetrics &m);
  /** `cycle,service,mode,success,offload,cost,handover_count` */
  void write_series_csv(std::ostream &out, std::span<const SimMetrics> runs);
  /** `service,mode,bin_lo,bin_hi,sessions,successes,success` */
  void write_density_csv(std::ostream &out, std::span<const SimMetrics> runs);

} // namespace trasonet

#endif // TRASONET_NETSIM_HPP
