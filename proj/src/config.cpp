#include "trasonet/config.hpp"

#include <fstream>
#include <sstream>

using nlohmann::json;

namespace trasonet
{

  std::string_view to_string(NetworkOption o) { return o == NetworkOption::Cellular ? "Cellular" : "VANET"; }

  std::string_view to_string(Service s) { return s == Service::Voice ? "Voice" : "Video"; }

  std::string_view to_string(VehicleRole r)
  {
    switch (r)
    {
    case VehicleRole::Regular:
      return "Regular";
    case VehicleRole::ProbeVehicle:
      return "ProbeVehicle";
    case VehicleRole::FloatingCar:
      return "FloatingCar";
    }
    return "?";
  }

  NetworkOption parse_network(std::string_view s)
  {
    if (s == "Cellular" || s == "cellular")
      return NetworkOption::Cellular;
    if (s == "VANET" || s == "vanet")
      return NetworkOption::VANET;
    throw ValidationError("unknown network option: " + std::string(s));
  }

  Service parse_service(std::string_view s)
  {
    if (s == "Voice" || s == "voice")
      return Service::Voice;
    if (s == "Video" || s == "video")
      return Service::Video;
    throw ValidationError("unknown service: " + std::string(s));
  }

  double street_coordinate(int index, int count, double extent)
  {
    return extent * static_cast<double>(index) / static_cast<double>(count - 1);
  }

  void NetworkParams::validate() const
  {
    const bool ok = enb_grid_spacing_m > 0 && enb_capacity_mbps > 0 && rsu_spacing_m > 0 && rsu_radius_m > 0 &&
                    rsu_capacity_mbps > 0 && rsu_sp_range_m >= 0 && cellular_base_delay_ms >= 0 &&
                    vanet_delay_per_user_ms >= 0 && voice_rate_mbps > 0 && video_rate_mbps > 0 &&
                    voice_mean_duration_s > 0 && video_mean_duration_s > 0 && session_rate_per_s >= 0 &&
                    success_fraction > 0 && success_fraction <= 1;
    if (!ok)
      throw ConfigError("network: capacities, radii, spacings and rates must be positive");
  }

  void CompletionParams::validate(std::size_t rows, std::size_t cols) const
  {
    if (target_rank < 1 || static_cast<std::size_t>(target_rank) > std::min(rows, cols))
      throw ConfigError("completion: target_rank must lie in [1, min(rows, cols)]");
    if (!(convergence_tol > 0))
      throw ConfigError("completion: convergence_tol must be positive");
    if (max_iterations < 0 || ridge < 0 || speed_max < speed_min)
      throw ConfigError("completion: invalid iteration count, ridge or speed bounds");
  }

  void HandoverPolicy::validate() const
  {
    if (!(qos_improvement_threshold > 0) || dwell_threshold_cycles <= 0)
      throw ConfigError("access: handover thresholds must be positive");
    if (trust < 0 || trust > 1 || !(trust_smoothing > 0) || !(trust_smoothing < 1))
      throw ConfigError("access: trust must be in [0,1] and trust_smoothing in (0,1)");
  }

  void ScenarioConfig::validate() const
  {
    if (!(map_width_m > 0) || !(map_height_m > 0))
      throw ConfigError("map dimensions must be positive");
    if (n_vertical_streets < 2 || n_horizontal_streets < 2)
      throw ConfigError("at least two streets per axis are required");
    if (n_vehicles < 0 || n_probe_vehicles < 0 || n_floating_cars < 0)
      throw ConfigError("vehicle counts must be non-negative");
    const long sensing = static_cast<long>(n_probe_vehicles) + n_floating_cars;
    if (n_vehicles > 0 && (sensing <= 0 || sensing > n_vehicles))
      throw ConfigError("need 0 < n_probe_vehicles + n_floating_cars <= n_vehicles");
    if (!(gamma > 0))
      throw ConfigError("gamma must be positive");
    if (social_spots.empty())
      throw ConfigError("at least one social spot is required");
    for (const auto &p : social_spots)
      if (p.x < 0 || p.y < 0 || p.x > map_width_m || p.y > map_height_m)
        throw ConfigError("social spot outside the map");
    if (!(mobility_radius_m > 0) || n_tiers < 1)
      throw ConfigError("mobility_radius_m must be positive and n_tiers >= 1");
    if (!(duty_cycle_s > 0) || horizon_cycles < 1 || !(speed_limit_kmh > 0))
      throw ConfigError("duty cycle, horizon and speed limit must be positive");
    if (service_mix < 0 || service_mix > 1)
      throw ConfigError("service_mix must be in [0,1]");
    if (recommendation.cell_size_m <= 0 || recommendation.refresh_cycles < 1)
      throw ConfigError("recommendation cell size and refresh period must be positive");
    network.validate();
    access.validate();
  }

  ScenarioConfig default_scenario()
  {
    ScenarioConfig c;
    auto at = [&](int i, int j) {
      return Point{street_coordinate(i, c.n_vertical_streets, c.map_width_m),
                   street_coordinate(j, c.n_horizontal_streets, c.map_height_m)};
    };
    c.social_spots = {at(5, 5), at(14, 5), at(5, 14), at(14, 14), at(9, 9)};
    return c;
  }

  ScenarioConfig desk_scenario()
  {
    ScenarioConfig c;
    c.map_width_m = 2000.0;
    c.map_height_m = 2000.0;
    c.n_vertical_streets = 9;
    c.n_horizontal_streets = 9;
    c.mobility_radius_m = 1000.0;
    c.n_vehicles = 2000;
    c.n_probe_vehicles = 200;
    c.n_floating_cars = 26;
    c.horizon_cycles = 60;
    c.network.enb_grid_spacing_m = 500.0;
    c.network.rsu_sp_range_m = 750.0;
    c.recommendation.refresh_cycles = 10;
    auto at = [&](int i, int j) {
      return Point{street_coordinate(i, c.n_vertical_streets, c.map_width_m),
                   street_coordinate(j, c.n_horizontal_streets, c.map_height_m)};
    };
    c.social_spots = {at(2, 2), at(6, 6)};
    return c;
  }

  // -- JSON ------------------------------------------------------------------

  namespace
  {
    template <typename T>
    void read(const json &j, const char *key, T &out)
    {
      if (auto it = j.find(key); it != j.end() && !it->is_null())
        out = it->get<T>();
    }

    Point point_from_json(const json &j)
    {
      if (j.is_array() && j.size() == 2)
        return {j[0].get<double>(), j[1].get<double>()};
      if (j.is_object())
        return {j.at("x").get<double>(), j.at("y").get<double>()};
      throw ConfigError("a position must be [x, y] or {\"x\":..,\"y\":..}");
    }

    std::vector<Point> points_from_json(const json &j)
    {
      std::vector<Point> out;
      for (const auto &p : j)
        out.push_back(point_from_json(p));
      return out;
    }

    json points_to_json(const std::vector<Point> &pts)
    {
      json a = json::array();
      for (const auto &p : pts)
        a.push_back({p.x, p.y});
      return a;
    }
  } // namespace

  void to_json(json &j, const ScenarioConfig &c)
  {
    const auto &n = c.network;
    j = json{
        {"map_width_m", c.map_width_m},
        {"map_height_m", c.map_height_m},
        {"n_vertical_streets", c.n_vertical_streets},
        {"n_horizontal_streets", c.n_horizontal_streets},
        {"social_spots", points_to_json(c.social_spots)},
        {"mobility_radius_m", c.mobility_radius_m},
        {"n_tiers", c.n_tiers},
        {"n_vehicles", c.n_vehicles},
        {"gamma", c.gamma},
        {"n_probe_vehicles", c.n_probe_vehicles},
        {"n_floating_cars", c.n_floating_cars},
        {"duty_cycle_s", c.duty_cycle_s},
        {"horizon_cycles", c.horizon_cycles},
        {"speed_limit_kmh", c.speed_limit_kmh},
        {"rng_seed", c.rng_seed},
        {"service_mix", c.service_mix},
        {"network",
         {{"enb_grid_spacing_m", n.enb_grid_spacing_m},
          {"enb_capacity_mbps", n.enb_capacity_mbps},
          {"rsu_spacing_m", n.rsu_spacing_m},
          {"rsu_sp_range_m", n.rsu_sp_range_m},
          {"rsu_positions", points_to_json(n.rsu_positions)},
          {"rsu_radius_m", n.rsu_radius_m},
          {"rsu_capacity_mbps", n.rsu_capacity_mbps},
          {"cellular_base_delay_ms", n.cellular_base_delay_ms},
          {"cellular_queueing_delay", n.cellular_queueing_delay},
          {"vanet_delay_per_user_ms", n.vanet_delay_per_user_ms},
          {"cellular_price_per_mb", n.cellular_price_per_mb},
          {"vanet_flat_price", n.vanet_flat_price},
          {"vanet_data_cap_mb", n.vanet_data_cap_mb},
          {"voice_rate_mbps", n.voice_rate_mbps},
          {"video_rate_mbps", n.video_rate_mbps},
          {"voice_mean_duration_s", n.voice_mean_duration_s},
          {"video_mean_duration_s", n.video_mean_duration_s},
          {"voice_delay_bound_ms", n.voice_delay_bound_ms},
          {"video_delay_bound_ms", n.video_delay_bound_ms},
          {"session_rate_per_s", n.session_rate_per_s},
          {"success_fraction", n.success_fraction}}},
        {"completion",
         {{"target_rank", c.completion.target_rank},
          {"max_iterations", c.completion.max_iterations},
          {"convergence_tol", c.completion.convergence_tol},
          {"ridge", c.completion.ridge}}},
        {"access",
         {{"qos_improvement_threshold", c.access.qos_improvement_threshold},
          {"dwell_threshold_cycles", c.access.dwell_threshold_cycles},
          {"trust", c.access.trust},
          {"trust_smoothing", c.access.trust_smoothing}}},
        {"recommendation",
         {{"cell_size_m", c.recommendation.cell_size_m}, {"refresh_cycles", c.recommendation.refresh_cycles}}},
    };
    if (c.rulebase_path)
      j["rulebase_path"] = *c.rulebase_path;
  }

  void from_json(const json &j, ScenarioConfig &c)
  {
    if (!j.is_object())
      throw ConfigError("scenario config must be a JSON object");
    read(j, "map_width_m", c.map_width_m);
    read(j, "map_height_m", c.map_height_m);
    read(j, "n_vertical_streets", c.n_vertical_streets);
    read(j, "n_horizontal_streets", c.n_horizontal_streets);
    if (auto it = j.find("social_spots"); it != j.end())
      c.social_spots = points_from_json(*it);
    read(j, "mobility_radius_m", c.mobility_radius_m);
    read(j, "n_tiers", c.n_tiers);
    read(j, "n_vehicles", c.n_vehicles);
    read(j, "gamma", c.gamma);
    read(j, "n_probe_vehicles", c.n_probe_vehicles);
    read(j, "n_floating_cars", c.n_floating_cars);
    read(j, "duty_cycle_s", c.duty_cycle_s);
    read(j, "horizon_cycles", c.horizon_cycles);
    read(j, "speed_limit_kmh", c.speed_limit_kmh);
    read(j, "rng_seed", c.rng_seed);
    read(j, "service_mix", c.service_mix);
    if (auto it = j.find("network"); it != j.end())
    {
      const json &nj = *it;
      auto &n = c.network;
      read(nj, "enb_grid_spacing_m", n.enb_grid_spacing_m);
      read(nj, "enb_capacity_mbps", n.enb_capacity_mbps);
      read(nj, "rsu_spacing_m", n.rsu_spacing_m);
      read(nj, "rsu_sp_range_m", n.rsu_sp_range_m);
      if (auto r = nj.find("rsu_positions"); r != nj.end())
        n.rsu_positions = points_from_json(*r);
      read(nj, "rsu_radius_m", n.rsu_radius_m);
      read(nj, "rsu_capacity_mbps", n.rsu_capacity_mbps);
      read(nj, "cellular_base_delay_ms", n.cellular_base_delay_ms);
      read(nj, "cellular_queueing_delay", n.cellular_queueing_delay);
      read(nj, "vanet_delay_per_user_ms", n.vanet_delay_per_user_ms);
      read(nj, "cellular_price_per_mb", n.cellular_price_per_mb);
      read(nj, "vanet_flat_price", n.vanet_flat_price);
      read(nj, "vanet_data_cap_mb", n.vanet_data_cap_mb);
      read(nj, "voice_rate_mbps", n.voice_rate_mbps);
      read(nj, "video_rate_mbps", n.video_rate_mbps);
      read(nj, "voice_mean_duration_s", n.voice_mean_duration_s);
      read(nj, "video_mean_duration_s", n.video_mean_duration_s);
      read(nj, "voice_delay_bound_ms", n.voice_delay_bound_ms);
      read(nj, "video_delay_bound_ms", n.video_delay_bound_ms);
      read(nj, "session_rate_per_s", n.session_rate_per_s);
      read(nj, "success_fraction", n.success_fraction);
    }
    if (auto it = j.find("completion"); it != j.end())
    {
      read(*it, "target_rank", c.completion.target_rank);
      read(*it, "max_iterations", c.completion.max_iterations);
      read(*it, "convergence_tol", c.completion.convergence_tol);
      read(*it, "ridge", c.completion.ridge);
    }
    if (auto it = j.find("access"); it != j.end())
    {
      read(*it, "qos_improvement_threshold", c.access.qos_improvement_threshold);
      read(*it, "dwell_threshold_cycles", c.access.dwell_threshold_cycles);
      read(*it, "trust", c.access.trust);
      read(*it, "trust_smoothing", c.access.trust_smoothing);
    }
    if (auto it = j.find("recommendation"); it != j.end())
    {
      read(*it, "cell_size_m", c.recommendation.cell_size_m);
      read(*it, "refresh_cycles", c.recommendation.refresh_cycles);
    }
    if (auto it = j.find("rulebase_path"); it != j.end() && it->is_string())
      c.rulebase_path = it->get<std::string>();
    c.completion.speed_max = c.speed_limit_kmh;
  }

  ScenarioConfig parse_config(const std::string &text)
  {
    ScenarioConfig c = default_scenario();
    try
    {
      const json j = json::parse(text);
      // A document that names its own spots replaces the defaults entirely.
      from_json(j, c);
    }
    catch (const json::exception &e)
    {
      throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
  }

  ScenarioConfig load_config(const std::filesystem::path &path)
  {
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
  }

} // namespace trasonet
