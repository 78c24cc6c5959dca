/**
 * TrasoNET simulator.
 *
 * Run definition: the scenario, network, completion and access parameters,
 * plus their JSON encoding. Field names in JSON match the member names.
 */
#ifndef TRASONET_CONFIG_HPP
#define TRASONET_CONFIG_HPP

#include "trasonet/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace trasonet
{

  /** Cellular / VANET capacity, delay and pricing model. */
  struct NetworkParams
  {
    double enb_grid_spacing_m = 2500.0;
    double enb_capacity_mbps = 100.0; /**< shared per eNB */
    double rsu_spacing_m = 500.0;     /**< along streets */
    double rsu_sp_range_m = 1500.0;   /**< RSUs are deployed only this close to a social spot */
    std::vector<Point> rsu_positions; /**< explicit deployment; overrides spacing when non-empty */
    double rsu_radius_m = 200.0;
    double rsu_capacity_mbps = 10.0; /**< shared per RSU */
    double cellular_base_delay_ms = 50.0;
    /** Scale the cellular delay by 1 / (1 - load) (infinite at or above capacity). */
    bool cellular_queueing_delay = true;
    double vanet_delay_per_user_ms = 10.0;
    double cellular_price_per_mb = 1.0; /**< RMB per megabit */
    double vanet_flat_price = 10.0;     /**< RMB per vehicle per billing period */
    double vanet_data_cap_mb = 2000.0;  /**< 2 Gb */
    double voice_rate_mbps = 0.0006;
    double video_rate_mbps = 5.0;
    double voice_mean_duration_s = 180.0;
    double video_mean_duration_s = 300.0;
    double voice_delay_bound_ms = 100.0;
    double video_delay_bound_ms = 150.0;
    double session_rate_per_s = 1.0 / 600.0; /**< Poisson arrivals per idle vehicle */
    double success_fraction = 0.95;

    double demand_mbps(Service s) const { return s == Service::Voice ? voice_rate_mbps : video_rate_mbps; }
    double delay_bound_ms(Service s) const { return s == Service::Voice ? voice_delay_bound_ms : video_delay_bound_ms; }
    double mean_duration_s(Service s) const
    {
      return s == Service::Voice ? voice_mean_duration_s : video_mean_duration_s;
    }
    void validate() const;
  };

  struct CompletionParams
  {
    int target_rank = 4;
    int max_iterations = 200;
    double convergence_tol = 1e-6; /**< relative Frobenius change between sweeps */
    double ridge = 1e-6;
    double speed_min = 0.0;
    double speed_max = 80.0;

    /** Throws ConfigError unless 1 <= target_rank <= min(rows, cols) and tol > 0. */
    void validate(std::size_t rows, std::size_t cols) const;
  };

  struct HandoverPolicy
  {
    double qos_improvement_threshold = 0.15;
    int dwell_threshold_cycles = 3;
    double trust = 1.0;
    double trust_smoothing = 0.2;
    void validate() const;
  };

  struct RecommendationParams
  {
    double cell_size_m = 500.0;
    int refresh_cycles = 10; /**< rebuild estimate and map every K duty cycles */
  };

  struct ScenarioConfig
  {
    double map_width_m = 10000.0;
    double map_height_m = 10000.0;
    int n_vertical_streets = 20;
    int n_horizontal_streets = 20;
    std::vector<Point> social_spots;
    double mobility_radius_m = 2500.0;
    int n_tiers = 10;
    int n_vehicles = 20000;
    double gamma = 2.0;
    int n_probe_vehicles = 2000;
    int n_floating_cars = 260;
    double duty_cycle_s = 30.0;
    int horizon_cycles = 120;
    double speed_limit_kmh = 80.0;
    std::uint64_t rng_seed = 1;
    double service_mix = 0.5; /**< fraction of sessions that are voice */
    NetworkParams network;
    CompletionParams completion;
    HandoverPolicy access;
    RecommendationParams recommendation;
    std::optional<std::string> rulebase_path;

    /** Throws ConfigError when an invariant does not hold. */
    void validate() const;
  };

  /**
   * The large reference scenario: 5 social spots on a 10 km x 10 km grid of
   * 20 x 20 streets with 20,000 vehicles, gamma = 2.
   */
  ScenarioConfig default_scenario();

  /** Desk-scale scenario: 2,000 vehicles, 2 km x 2 km, 2 social spots, 60 cycles. */
  ScenarioConfig desk_scenario();

  /** Street coordinate of street `index` among `count` evenly spaced streets over `extent`. */
  double street_coordinate(int index, int count, double extent);

  void to_json(nlohmann::json &j, const ScenarioConfig &c);
  void from_json(const nlohmann::json &j, ScenarioConfig &c);

  /** Parse and validate; absent keys keep their defaults. Throws ConfigError. */
  ScenarioConfig parse_config(const std::string &text);
  ScenarioConfig load_config(const std::filesystem::path &path);

} // namespace trasonet

#endif // TRASONET_CONFIG_HPP
