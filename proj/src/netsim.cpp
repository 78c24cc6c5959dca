#include "trasonet/netsim.hpp"

#include "trasonet/completion.hpp"
#include "trasonet/csv.hpp"
#include "trasonet/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <set>

using nlohmann::json;

namespace trasonet
{

  std::string_view to_string(SimMode m) { return m == SimMode::Baseline ? "baseline" : "trasonet"; }

  SimMode parse_mode(std::string_view s)
  {
    if (s == "baseline" || s == "Baseline")
      return SimMode::Baseline;
    if (s == "trasonet" || s == "TrasoNET")
      return SimMode::TrasoNET;
    throw ValidationError("unknown mode: " + std::string(s));
  }

  std::vector<Point> deploy_enbs(const NetworkParams &params, double width, double height)
  {
    const int nx = std::max(1, static_cast<int>(std::lround(width / params.enb_grid_spacing_m)));
    const int ny = std::max(1, static_cast<int>(std::lround(height / params.enb_grid_spacing_m)));
    std::vector<Point> out;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        out.push_back({(i + 0.5) * width / nx, (j + 0.5) * height / ny});
    return out;
  }

  std::vector<Point> deploy_rsus(const NetworkParams &params, const RoadNetwork &network,
                                 std::span<const Point> social_spots)
  {
    if (!params.rsu_positions.empty())
      return params.rsu_positions;
    std::vector<Point> out;
    std::set<std::pair<long long, long long>> seen;
    auto consider = [&](Point p) {
      const bool near_spot = std::any_of(social_spots.begin(), social_spots.end(),
                                         [&](Point s) { return distance(p, s) <= params.rsu_sp_range_m; });
      if (!near_spot)
        return;
      const auto key = std::make_pair(std::llround(p.x * 1e3), std::llround(p.y * 1e3));
      if (seen.insert(key).second)
        out.push_back(p);
    };
    const auto xs = network.xs(), ys = network.ys();
    for (double x : xs)
      for (double y = ys.front(); y <= ys.back() + 1e-9; y += params.rsu_spacing_m)
        consider({x, y});
    for (double y : ys)
      for (double x = xs.front(); x <= xs.back() + 1e-9; x += params.rsu_spacing_m)
        consider({x, y});
    return out;
  }

  Infrastructure deploy_infrastructure(const ScenarioConfig &config, const RoadNetwork &network)
  {
    return {deploy_enbs(config.network, network.xs().back(), network.ys().back()),
            deploy_rsus(config.network, network, config.social_spots)};
  }

  int nearest_enb(Point p, std::span<const Point> enbs)
  {
    if (enbs.empty())
      throw ValidationError("no eNB deployed");
    int best = 0;
    double best_d = distance(p, enbs[0]);
    for (std::size_t i = 1; i < enbs.size(); ++i)
      if (const double d = distance(p, enbs[i]); d < best_d)
      {
        best = static_cast<int>(i);
        best_d = d;
      }
    return best;
  }

  std::optional<int> nearest_rsu(Point p, std::span<const Point> rsus, double radius_m)
  {
    std::optional<int> best;
    double best_d = radius_m;
    for (std::size_t i = 0; i < rsus.size(); ++i)
      if (const double d = distance(p, rsus[i]); d < best_d || (d == best_d && !best))
      {
        best = static_cast<int>(i);
        best_d = d;
      }
    return best;
  }

  std::vector<double> max_min_share(std::span<const double> demands, double capacity)
  {
    std::vector<std::size_t> order(demands.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return demands[a] < demands[b]; });
    std::vector<double> out(demands.size(), 0.0);
    double left = capacity;
    std::size_t remaining = demands.size();
    for (std::size_t k : order)
    {
      const double share = left / static_cast<double>(remaining);
      out[k] = std::min(std::max(demands[k], 0.0), share);
      left = std::max(0.0, left - out[k]);
      --remaining;
    }
    return out;
  }

  std::vector<LinkOutcome> allocate_capacity(std::span<const Attachment> attachments, const Infrastructure &infra,
                                             const NetworkParams &params)
  {
    // Group sessions per (network, node).
    std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < attachments.size(); ++k)
    {
      const auto &a = attachments[k];
      const auto &nodes = a.network == NetworkOption::Cellular ? infra.enbs : infra.rsus;
      if (a.node < 0 || static_cast<std::size_t>(a.node) >= nodes.size())
        throw InvariantViolation("attachment to an unknown node");
      groups[{static_cast<int>(a.network), a.node}].push_back(k);
    }

    std::vector<LinkOutcome> out(attachments.size());
    for (const auto &[key, members] : groups)
    {
      const bool cellular = key.first == static_cast<int>(NetworkOption::Cellular);
      const double capacity = cellular ? params.enb_capacity_mbps : params.rsu_capacity_mbps;
      std::vector<double> demands;
      double offered = 0.0;
      for (std::size_t k : members)
      {
        demands.push_back(attachments[k].demand_mbps);
        offered += attachments[k].demand_mbps;
      }
      const auto rates = max_min_share(demands, capacity);
      double delay;
      if (cellular)
      {
        const double load = offered / capacity;
        delay = !params.cellular_queueing_delay ? params.cellular_base_delay_ms
                : load < 1.0                    ? params.cellular_base_delay_ms / (1.0 - load)
                                                : std::numeric_limits<double>::infinity();
      }
      else
        delay = params.vanet_delay_per_user_ms * static_cast<double>(members.size());
      for (std::size_t m = 0; m < members.size(); ++m)
        out[members[m]] = {rates[m], delay};
    }
    return out;
  }

  Charge accrue_cost(NetworkOption network, double megabits, VanetAccount &account, const NetworkParams &params)
  {
    if (!(megabits >= 0.0))
      throw ValidationError("accrue_cost: volume must be non-negative");
    Charge c;
    if (network == NetworkOption::Cellular)
    {
      c.marginal = megabits * params.cellular_price_per_mb;
      return c;
    }
    if (!account.subscribed)
    {
      account.subscribed = true;
      c.flat = params.vanet_flat_price;
    }
    const double free_left = std::max(0.0, params.vanet_data_cap_mb - account.used_mb);
    c.marginal = std::max(0.0, megabits - free_left) * params.cellular_price_per_mb;
    account.used_mb += megabits;
    return c;
  }

  double achieved_qos(const LinkOutcome &link, double demand_mbps, double delay_bound_ms)
  {
    const double r = demand_mbps > 0 ? std::min(1.0, link.rate_mbps / demand_mbps) : 1.0;
    const double d = link.delay_ms > 0 ? std::min(1.0, delay_bound_ms / link.delay_ms) : 1.0;
    return std::clamp(r * d, 0.0, 1.0);
  }

  std::vector<DensityBin> make_density_bins()
  {
    std::vector<DensityBin> bins;
    for (int k = 0; k < 10; ++k)
      bins.push_back({k * 0.01, (k + 1) * 0.01, 0, 0});
    bins.push_back({0.10, std::numeric_limits<double>::infinity(), 0, 0});
    return bins;
  }

  namespace
  {
    bool link_ok(const LinkOutcome &link, double demand, double bound)
    {
      return link.rate_mbps >= demand * (1.0 - 1e-9) && link.delay_ms <= bound;
    }

    /** Vehicles per street metre on the recommendation cell grid, from current positions. */
    class DensityGrid
    {
    public:
      DensityGrid(const RoadNetwork &net, double cell) : cell_(cell)
      {
        const double w = net.xs().back(), h = net.ys().back();
        nx_ = std::max(1, static_cast<int>(std::ceil(w / cell - 1e-9)));
        ny_ = std::max(1, static_cast<int>(std::ceil(h / cell - 1e-9)));
        street_.resize(static_cast<std::size_t>(nx_ * ny_));
        for (int cy = 0; cy < ny_; ++cy)
          for (int cx = 0; cx < nx_; ++cx)
            street_[static_cast<std::size_t>(cy * nx_ + cx)] =
                net.street_length_in(cx * cell, std::min(w, (cx + 1) * cell), cy * cell, std::min(h, (cy + 1) * cell));
        counts_.assign(street_.size(), 0);
      }

      std::size_t cell_of(Point p) const
      {
        const int cx = std::clamp(static_cast<int>(std::floor(p.x / cell_)), 0, nx_ - 1);
        const int cy = std::clamp(static_cast<int>(std::floor(p.y / cell_)), 0, ny_ - 1);
        return static_cast<std::size_t>(cy * nx_ + cx);
      }

      void recount(std::span<const VehicleState> vehicles)
      {
        std::fill(counts_.begin(), counts_.end(), 0);
        for (const auto &v : vehicles)
          ++counts_[cell_of(v.position)];
      }

      double density(Point p) const
      {
        const std::size_t k = cell_of(p);
        return street_[k] > 0 ? counts_[k] / street_[k] : 0.0;
      }

    private:
      double cell_;
      int nx_ = 1, ny_ = 1;
      std::vector<double> street_;
      std::vector<int> counts_;
    };

    struct SessionTrack
    {
      int ok_cycles = 0;
      int cycles = 0;
      double last_qos = 1.0;
      double predicted = 0.0;
    };

    void close_session(ServiceMetrics &sm, const SessionState &s, const SessionTrack &t, double success_fraction)
    {
      const bool success =
          t.cycles > 0 && static_cast<double>(t.ok_cycles) >= success_fraction * static_cast<double>(t.cycles) - 1e-12;
      ++sm.sessions;
      sm.successes += success ? 1 : 0;
      sm.total_cost += s.cost_accrued;
      sm.handovers += s.handovers;
      for (auto &bin : sm.bins)
        if (s.start_density >= bin.lo && s.start_density < bin.hi)
        {
          ++bin.sessions;
          bin.successes += success ? 1 : 0;
          break;
        }
    }

    void check_containment(std::span<const VehicleState> vehicles, std::span<const SocialSpot> spots)
    {
      for (const auto &v : vehicles)
      {
        if (v.role == VehicleRole::FloatingCar)
          continue;
        const auto &spot = spots[static_cast<std::size_t>(v.home_spot)];
        if (distance(v.position, spot.position) > spot.mobility_radius_m + 1e-6)
          throw InvariantViolation("vehicle " + std::to_string(v.vehicle_id) + " left its mobility region");
      }
    }
  } // namespace

  SimMetrics run_simulation(const ScenarioConfig &config, SimMode mode)
  {
    config.validate();
    const RoadNetwork net = build_road_network(config);
    const auto spots = social_spots(config);
    const Infrastructure infra = deploy_infrastructure(config, net);
    const NetworkParams &np = config.network;
    const double dt = config.duty_cycle_s;
    const int horizon = config.horizon_cycles;
    const int refresh = std::max(1, config.recommendation.refresh_cycles);

    Rng placement_rng = Rng::stream(config.rng_seed, "placement");
    Rng mobility_rng = Rng::stream(config.rng_seed, "mobility");
    Rng session_rng = Rng::stream(config.rng_seed, "sessions");

    auto vehicles = place_vehicles(config, net, placement_rng);
    const MobilityContext ctx{net, spots, config.speed_limit_kmh};

    std::vector<VehicleId> fc_ids;
    for (const auto &v : vehicles)
      if (v.role == VehicleRole::FloatingCar)
        fc_ids.push_back(v.vehicle_id);

    std::shared_ptr<const Rulebase> rulebase =
        std::make_shared<const Rulebase>(config.rulebase_path ? load_rulebase(*config.rulebase_path) : default_rulebase());
    std::vector<std::optional<AccessEngine>> engines(vehicles.size());
    if (mode == SimMode::TrasoNET)
      for (auto &e : engines)
        e.emplace(rulebase, config.access);

    std::vector<SessionTrack> tracks(vehicles.size());
    std::vector<VanetAccount> accounts(vehicles.size());
    DensityGrid density(net, config.recommendation.cell_size_m);

    SimMetrics metrics;
    metrics.mode = mode;
    metrics.seed = config.rng_seed;
    metrics.cycles = horizon;
    metrics.n_enbs = static_cast<int>(infra.enbs.size());
    metrics.n_rsus = static_cast<int>(infra.rsus.size());

    std::vector<GpsReport> reports;
    FcRoutePlan plan;
    RecommendationMap rec_map;
    const double p_arrival = 1.0 - std::exp(-np.session_rate_per_s * dt);

    for (int t = 0; t < horizon; ++t)
    {
      step_mobility(vehicles, ctx, dt, mobility_rng, plan.routes.empty() ? nullptr : &plan, t);
      check_containment(vehicles, spots);
      density.recount(vehicles);

      for (auto &r : emit_reports(vehicles, t))
        reports.push_back(r);

      if (t % refresh == 0)
      {
        const TrafficMatrix observed = build_traffic_matrix(reports, net, t + 1);
        CompletionParams cp = config.completion;
        cp.target_rank = std::min<int>(cp.target_rank, static_cast<int>(std::min(observed.rows(), observed.cols())));
        cp.speed_max = config.speed_limit_kmh;
        const CompletionResult est = complete_matrix(observed, cp);
        if (mode == SimMode::TrasoNET)
          rec_map = recommendation_map(est.estimate, {net, vehicles, infra.rsus, np.rsu_radius_m,
                                                      config.recommendation.cell_size_m});
        if (!fc_ids.empty())
        {
          FcPlanOptions opts;
          opts.vehicle_ids = fc_ids;
          opts.start_cycle = t + 1;
          for (VehicleId id : fc_ids)
            opts.start_segments.push_back(vehicles[static_cast<std::size_t>(id)].segment);
          TrafficMatrix full = build_traffic_matrix(reports, net, horizon);
          plan = plan_fc_routes(static_cast<int>(fc_ids.size()), full, net, refresh, opts);
        }
      }

      // Arrivals: the same draws in both modes keep the runs paired.
      for (auto &v : vehicles)
      {
        const double u_arrive = session_rng.uniform();
        const double u_service = session_rng.uniform();
        const double unit_duration = session_rng.exponential(1.0);
        if (v.active_session || u_arrive >= p_arrival)
          continue;
        SessionState s;
        s.service = u_service < config.service_mix ? Service::Voice : Service::Video;
        s.demand_mbps = np.demand_mbps(s.service);
        s.duration_s = std::max(unit_duration * np.mean_duration_s(s.service), 1e-9);
        s.remaining_s = s.duration_s;
        s.start_density = density.density(v.position);
        s.attached_network = NetworkOption::Cellular;
        if (mode == SimMode::TrasoNET)
          s.attached_network = rec_map.at(v.position).best[static_cast<std::size_t>(s.service)];
        v.active_session = std::move(s);
        v.current_network.reset();
        tracks[static_cast<std::size_t>(v.vehicle_id)] = SessionTrack{};
      }

      // Network choice and attachment.
      std::vector<std::size_t> active;
      std::vector<Attachment> attachments;
      std::vector<FuzzyInputs> inputs;
      std::array<int, kServiceCount> cycle_handovers{};
      for (std::size_t k = 0; k < vehicles.size(); ++k)
      {
        auto &v = vehicles[k];
        if (!v.active_session)
          continue;
        SessionState &s = *v.active_session;
        const bool fresh = !v.current_network.has_value();
        NetworkOption want = s.attached_network;
        FuzzyInputs in;
        if (mode == SimMode::TrasoNET)
        {
          in = {v.speed_kmh, s.service, s.attached_network,
                rec_map.at(v.position).best[static_cast<std::size_t>(s.service)]};
          if (!fresh && engines[k]->observe(in, tracks[k].last_qos))
            want = other(s.attached_network);
        }
        else
          want = NetworkOption::Cellular;

        Attachment a{NetworkOption::Cellular, nearest_enb(v.position, infra.enbs), s.demand_mbps};
        if (want == NetworkOption::VANET)
          if (auto r = nearest_rsu(v.position, infra.rsus, np.rsu_radius_m))
            a = {NetworkOption::VANET, *r, s.demand_mbps};

        if (!fresh && a.network != s.attached_network)
        {
          ++s.handovers;
          ++cycle_handovers[static_cast<std::size_t>(s.service)];
          if (engines[k])
            engines[k]->reset_counter();
        }
        s.attached_network = a.network;
        v.current_network = a.network;
        in.current_option = a.network;
        active.push_back(k);
        attachments.push_back(a);
        inputs.push_back(in);
      }

      const auto links = allocate_capacity(attachments, infra, np);

      // Invariants: capacity conservation and attachment validity.
      {
        std::map<std::pair<int, int>, double> used;
        for (std::size_t m = 0; m < attachments.size(); ++m)
        {
          const auto &a = attachments[m];
          used[{static_cast<int>(a.network), a.node}] += links[m].rate_mbps;
          if (a.network == NetworkOption::VANET &&
              distance(vehicles[active[m]].position, infra.rsus[static_cast<std::size_t>(a.node)]) >
                  np.rsu_radius_m + 1e-9)
            throw InvariantViolation("VANET attachment beyond RSU radius");
        }
        for (const auto &[key, rate] : used)
        {
          const double cap = key.first == 0 ? np.enb_capacity_mbps : np.rsu_capacity_mbps;
          if (rate > cap * (1.0 + 1e-9))
            throw InvariantViolation("node capacity exceeded");
        }
      }

      std::array<int, kServiceCount> n_active{}, n_ok{};
      std::array<double, kServiceCount> mb_total{}, mb_vanet{}, cost{};
      for (std::size_t m = 0; m < active.size(); ++m)
      {
        const std::size_t k = active[m];
        auto &v = vehicles[k];
        SessionState &s = *v.active_session;
        const auto si = static_cast<std::size_t>(s.service);
        const LinkOutcome &link = links[m];
        const double bound = np.delay_bound_ms(s.service);
        const bool ok = link_ok(link, s.demand_mbps, bound);
        const double q = achieved_qos(link, s.demand_mbps, bound);
        SessionTrack &track = tracks[k];
        ++track.cycles;
        track.ok_cycles += ok ? 1 : 0;
        track.last_qos = q;
        s.achieved_rate_history.push_back(link.rate_mbps);
        s.delay_history.push_back(link.delay_ms);

        const double seconds = std::min(dt, s.remaining_s);
        const double mb = link.rate_mbps * seconds;
        const Charge c = accrue_cost(attachments[m].network, mb, accounts[k], np);
        s.cost_accrued += c.total();

        ++n_active[si];
        n_ok[si] += ok ? 1 : 0;
        mb_total[si] += mb;
        if (attachments[m].network == NetworkOption::VANET)
          mb_vanet[si] += mb;
        cost[si] += c.total();
        ServiceMetrics &sm = metrics.services[si];
        sm.total_mb += mb;
        if (attachments[m].network == NetworkOption::VANET)
          sm.vanet_mb += mb;

        if (engines[k])
        {
          const double predicted = engines[k]->predict_current(inputs[m]);
          engines[k]->learn(inputs[m], predicted, q, t);
        }

        s.remaining_s -= dt;
        if (s.remaining_s <= 1e-9)
        {
          close_session(sm, s, track, np.success_fraction);
          v.active_session.reset();
          v.current_network.reset();
        }
      }

      for (int si = 0; si < kServiceCount; ++si)
      {
        CycleRecord r;
        r.cycle = t;
        r.service = static_cast<Service>(si);
        r.success = n_active[si] > 0 ? static_cast<double>(n_ok[si]) / n_active[si] : 1.0;
        r.offload = mb_total[si] > 0 ? mb_vanet[si] / mb_total[si] : 0.0;
        r.cost = cost[si];
        r.handovers = cycle_handovers[static_cast<std::size_t>(si)];
        metrics.series.push_back(r);
      }
    }

    for (std::size_t k = 0; k < vehicles.size(); ++k)
      if (const auto &s = vehicles[k].active_session; s && tracks[k].cycles > 0)
        close_session(metrics.services[static_cast<std::size_t>(s->service)], *s, tracks[k], np.success_fraction);

    for (auto &sm : metrics.services)
    {
      sm.no_sessions = sm.sessions == 0;
      sm.success_probability = sm.no_sessions ? 1.0 : static_cast<double>(sm.successes) / sm.sessions;
      sm.offload_fraction = sm.total_mb > 0 ? sm.vanet_mb / sm.total_mb : 0.0;
      sm.mean_cost = sm.sessions > 0 ? sm.total_cost / sm.sessions : 0.0;
      if (sm.success_probability < 0 || sm.success_probability > 1 || sm.offload_fraction < 0 ||
          sm.offload_fraction > 1 + 1e-12)
        throw InvariantViolation("metric outside [0,1]");
    }
    return metrics;
  }

  json metrics_to_json(const SimMetrics &m)
  {
    json services = json::object();
    for (int si = 0; si < kServiceCount; ++si)
    {
      const auto &sm = m.services[static_cast<std::size_t>(si)];
      json bins = json::array();
      for (const auto &b : sm.bins)
        bins.push_back({{"lo", b.lo},
                        {"hi", std::isinf(b.hi) ? json(nullptr) : json(b.hi)},
                        {"sessions", b.sessions},
                        {"successes", b.successes},
                        {"success_probability", b.success_probability()}});
      services[std::string(to_string(static_cast<Service>(si)))] = {
          {"sessions", sm.sessions},
          {"successes", sm.successes},
          {"success_probability", sm.success_probability},
          {"no_sessions", sm.no_sessions},
          {"offload_fraction", sm.offload_fraction},
          {"total_mb", sm.total_mb},
          {"vanet_mb", sm.vanet_mb},
          {"mean_cost", sm.mean_cost},
          {"handovers", sm.handovers},
          {"density_bins", bins}};
    }
    return {{"mode", to_string(m.mode)}, {"seed", m.seed},          {"cycles", m.cycles},
            {"n_enbs", m.n_enbs},         {"n_rsus", m.n_rsus}, {"services", services}};
  }

  void write_series_csv(std::ostream &out, std::span<const SimMetrics> runs)
  {
    out << "cycle,service,mode,success,offload,cost,handover_count\n";
    for (const auto &m : runs)
      for (const auto &r : m.series)
        out << r.cycle << ',' << to_string(r.service) << ',' << to_string(m.mode) << ',' << csv::num(r.success) << ','
            << csv::num(r.offload) << ',' << csv::num(r.cost) << ',' << r.handovers << '\n';
  }

  void write_density_csv(std::ostream &out, std::span<const SimMetrics> runs)
  {
    out << "service,mode,bin_lo,bin_hi,sessions,successes,success\n";
    for (const auto &m : runs)
      for (int si = 0; si < kServiceCount; ++si)
        for (const auto &b : m.services[static_cast<std::size_t>(si)].bins)
          out << to_string(static_cast<Service>(si)) << ',' << to_string(m.mode) << ',' << csv::num(b.lo) << ','
              << (std::isinf(b.hi) ? std::string("inf") : csv::num(b.hi)) << ',' << b.sessions << ',' << b.successes
              << ',' << csv::num(b.success_probability()) << '\n';
  }

} // namespace trasonet
