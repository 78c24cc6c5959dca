#include "trasonet/harness.hpp"

#include "trasonet/completion.hpp"
#include "trasonet/csv.hpp"
#include "trasonet/sensing.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

using nlohmann::json;
namespace fs = std::filesystem;

namespace trasonet
{

  namespace
  {
    constexpr const char *kModuleVersion = "1.0.0";

    /** Thrown for unreadable inputs and unwritable outputs. */
    struct IoError : std::runtime_error
    {
      using std::runtime_error::runtime_error;
    };

    std::string read_file(const fs::path &p)
    {
      std::ifstream in(p, std::ios::binary);
      if (!in)
        throw ValidationError("cannot read " + p.string());
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }

    std::ofstream open_out(const fs::path &p)
    {
      std::ofstream out(p, std::ios::binary);
      if (!out)
        throw IoError("cannot write " + p.string());
      return out;
    }

    void prepare_dir(const fs::path &dir)
    {
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec)
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }

    struct LoadedConfig
    {
      ScenarioConfig config;
      std::string path;
      std::string hash;
    };

    LoadedConfig load_or(const std::optional<std::string> &path, ScenarioConfig (*fallback)())
    {
      if (path)
      {
        const std::string text = read_file(*path);
        return {parse_config(text), *path, hex_hash(text)};
      }
      ScenarioConfig c = fallback();
      return {c, "<built-in>", hex_hash(json(c).dump())};
    }

    /** Exceptions to exit codes, with a one-line diagnostic. */
    template <typename F>
    int guarded(std::ostream &log, const char *command, F &&body)
    {
      try
      {
        return body();
      }
      catch (const ConfigError &e)
      {
        log << command << ": config error: " << e.what() << '\n';
        return kExitParse;
      }
      catch (const ValidationError &e)
      {
        log << command << ": invalid input: " << e.what() << '\n';
        return kExitParse;
      }
      catch (const json::exception &e)
      {
        log << command << ": parse error: " << e.what() << '\n';
        return kExitParse;
      }
      catch (const InvariantViolation &e)
      {
        log << command << ": invariant violated: " << e.what() << '\n';
        return kExitInvariant;
      }
      catch (const IoError &e)
      {
        log << command << ": " << e.what() << '\n';
        return kExitIo;
      }
    }

    struct Stopwatch
    {
      std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
      double seconds() const
      {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
    };

    void finish_manifest(RunManifest &m, const Stopwatch &w)
    {
      m.wall_clock_s = w.seconds();
      m.status = "complete";
      write_manifest(m);
    }

    double mean_of(const std::vector<double> &v)
    {
      double s = 0.0;
      for (double x : v)
        s += x;
      return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    }

    double stddev_of(const std::vector<double> &v)
    {
      const double m = mean_of(v);
      double s = 0.0;
      for (double x : v)
        s += (x - m) * (x - m);
      return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
    }

    /** Seeded sensing pass over a whole scenario: mobility plus probe reports. */
    struct SensingRun
    {
      RoadNetwork network;
      std::vector<VehicleState> vehicles;
      std::vector<GpsReport> reports;
    };

    SensingRun sense_scenario(const ScenarioConfig &config)
    {
      SensingRun run;
      run.network = build_road_network(config);
      const auto spots = social_spots(config);
      Rng placement = Rng::stream(config.rng_seed, "placement");
      Rng mobility = Rng::stream(config.rng_seed, "mobility");
      run.vehicles = place_vehicles(config, run.network, placement);
      const MobilityContext ctx{run.network, spots, config.speed_limit_kmh};
      for (int t = 0; t < config.horizon_cycles; ++t)
      {
        step_mobility(run.vehicles, ctx, config.duty_cycle_s, mobility);
        for (auto &r : emit_reports(run.vehicles, t))
          run.reports.push_back(r);
      }
      return run;
    }

    CompletionParams completion_params(const EstimateOptions &opt, CompletionParams p)
    {
      if (opt.target_rank)
        p.target_rank = *opt.target_rank;
      if (opt.max_iterations)
        p.max_iterations = *opt.max_iterations;
      if (opt.tol)
        p.convergence_tol = *opt.tol;
      return p;
    }

    struct TrialResult
    {
      double entropy = 0.0;
      double error = 0.0;
      double frobenius = 0.0;
      double observed_fraction = 0.0;
      int iterations = 0;
      bool converged = false;
    };

    TrialResult synthetic_trial(const EstimateOptions &opt, const CompletionParams &params, double rate,
                                std::uint64_t seed, TrafficMatrix *observed_out, Eigen::MatrixXd *estimate_out)
    {
      Rng truth_rng = Rng::stream(seed, "truth");
      Rng sample_rng = Rng::stream(seed, "sampling");
      const Eigen::MatrixXd truth = synthetic_low_rank(opt.rows, opt.cols, opt.rank, params.speed_max, truth_rng);
      const TrafficMatrix observed = sample_uniform(truth, rate, sample_rng);
      const CompletionResult res = complete_matrix(observed, params);
      TrialResult r;
      r.entropy = average_entropy(observed);
      r.error = estimation_error(res.estimate, truth, observed);
      r.frobenius = relative_frobenius_error(res.estimate, truth, observed);
      r.observed_fraction =
          static_cast<double>(observed.observed_count()) / static_cast<double>(observed.rows() * observed.cols());
      r.iterations = res.iterations_used;
      r.converged = res.converged;
      if (observed_out)
        *observed_out = observed;
      if (estimate_out)
        *estimate_out = res.estimate;
      return r;
    }

    void write_error_header(std::ostream &out)
    {
      out << "sample_rate,trials,average_entropy,estimation_error,relative_frobenius_error,observed_fraction,"
             "iterations,converged\n";
    }

    void write_error_row(std::ostream &out, double rate, const std::vector<TrialResult> &trials)
    {
      std::vector<double> ent, err, fro, obs, it;
      bool all_converged = true;
      for (const auto &t : trials)
      {
        ent.push_back(t.entropy);
        err.push_back(t.error);
        fro.push_back(t.frobenius);
        obs.push_back(t.observed_fraction);
        it.push_back(t.iterations);
        all_converged = all_converged && t.converged;
      }
      out << csv::num(rate) << ',' << trials.size() << ',' << csv::num(mean_of(ent)) << ',' << csv::num(mean_of(err))
          << ',' << csv::num(mean_of(fro)) << ',' << csv::num(mean_of(obs)) << ',' << csv::num(mean_of(it)) << ','
          << (all_converged ? 1 : 0) << '\n';
    }
  } // namespace

  std::string hex_hash(std::string_view bytes)
  {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
  }

  json manifest_to_json(const RunManifest &m)
  {
    return {{"command", m.command},
            {"config_path", m.config_path},
            {"config_hash", m.config_hash},
            {"seed", m.seed},
            {"mode", m.mode},
            {"module_versions",
             {{"scenario", kModuleVersion},
              {"sensing", kModuleVersion},
              {"completion", kModuleVersion},
              {"ahp", kModuleVersion},
              {"access", kModuleVersion},
              {"netsim", kModuleVersion},
              {"harness", kModuleVersion}}},
            {"output_dir", m.output_dir},
            {"wall_clock_s", m.wall_clock_s},
            {"status", m.status},
            {"extra", m.extra}};
  }

  void write_manifest(const RunManifest &m)
  {
    prepare_dir(m.output_dir);
    auto out = open_out(fs::path(m.output_dir) / "manifest.json");
    out << manifest_to_json(m).dump(2) << '\n';
  }

  fs::path resolve_output_dir(const std::optional<std::string> &out, const std::string &command)
  {
    if (out)
      return *out;
    if (const char *root = std::getenv(kOutputRootEnv); root && *root)
      return fs::path(root) / command;
    return fs::path("trasonet_out") / command;
  }

  std::vector<double> parse_sweep(const std::string &spec)
  {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || spec.substr(0, eq) != "sample_rate")
      throw ValidationError("--sweep expects sample_rate=<r1>,<r2>,...");
    std::vector<double> rates;
    for (const auto &f : csv::split(spec.substr(eq + 1)))
    {
      char *end = nullptr;
      const double r = std::strtod(f.c_str(), &end);
      if (f.empty() || *end != '\0' || !(r > 0.0 && r <= 1.0))
        throw ValidationError("--sweep: bad sample rate '" + f + "'");
      rates.push_back(r);
    }
    if (rates.empty())
      throw ValidationError("--sweep: no sample rates");
    return rates;
  }

  std::vector<std::vector<double>> read_matrix_csv(std::istream &in)
  {
    std::vector<std::vector<double>> rows;
    for (const auto &line : csv::lines(in))
    {
      if (line.empty() || line[0] == '#')
        continue;
      std::vector<double> row;
      for (auto f : csv::split(line))
      {
        while (!f.empty() && std::isspace(static_cast<unsigned char>(f.back())))
          f.pop_back();
        while (!f.empty() && std::isspace(static_cast<unsigned char>(f.front())))
          f.erase(f.begin());
        const auto slash = f.find('/');
        const std::string num = slash == std::string::npos ? f : f.substr(0, slash);
        const std::string den = slash == std::string::npos ? "1" : f.substr(slash + 1);
        char *e1 = nullptr, *e2 = nullptr;
        const double a = std::strtod(num.c_str(), &e1), b = std::strtod(den.c_str(), &e2);
        if (num.empty() || den.empty() || *e1 != '\0' || *e2 != '\0' || b == 0.0)
          throw ValidationError("matrix CSV: bad entry '" + f + "'");
        row.push_back(a / b);
      }
      rows.push_back(std::move(row));
    }
    if (rows.empty())
      throw ValidationError("matrix CSV is empty");
    for (const auto &row : rows)
      if (row.size() != rows.size())
        throw ValidationError("matrix CSV is not square");
    return rows;
  }

  json aggregate_metrics(const std::vector<SimMetrics> &runs)
  {
    json out = json::object();
    for (SimMode mode : {SimMode::Baseline, SimMode::TrasoNET})
    {
      json per_service = json::object();
      bool any = false;
      for (int si = 0; si < kServiceCount; ++si)
      {
        std::vector<double> succ, off, cost, ho;
        for (const auto &r : runs)
          if (r.mode == mode)
          {
            const auto &sm = r.services[static_cast<std::size_t>(si)];
            succ.push_back(sm.success_probability);
            off.push_back(sm.offload_fraction);
            cost.push_back(sm.mean_cost);
            ho.push_back(static_cast<double>(sm.handovers));
          }
        if (succ.empty())
          continue;
        any = true;
        auto stat = [](const std::vector<double> &v) { return json{{"mean", mean_of(v)}, {"stddev", stddev_of(v)}}; };
        per_service[std::string(to_string(static_cast<Service>(si)))] = {{"replicas", succ.size()},
                                                                          {"success_probability", stat(succ)},
                                                                          {"offload_fraction", stat(off)},
                                                                          {"mean_cost", stat(cost)},
                                                                          {"handovers", stat(ho)}};
      }
      if (any)
        out[std::string(to_string(mode))] = per_service;
    }
    return out;
  }

  int cmd_simulate(const SimulateOptions &opt, std::ostream &log)
  {
    return guarded(log, "simulate", [&] {
      LoadedConfig lc = load_or(opt.config_path, &desk_scenario);
      if (opt.seed)
        lc.config.rng_seed = *opt.seed;
      if (opt.replicas < 1)
        throw ValidationError("--replicas must be at least 1");
      std::vector<SimMode> modes;
      if (opt.mode == "both")
        modes = {SimMode::Baseline, SimMode::TrasoNET};
      else
        modes = {parse_mode(opt.mode)};

      const fs::path dir = resolve_output_dir(opt.out, "simulate");
      Stopwatch watch;
      RunManifest manifest{"simulate", lc.path, lc.hash, lc.config.rng_seed, opt.mode, dir.string()};
      manifest.extra = {{"replicas", opt.replicas}};
      write_manifest(manifest);

      std::vector<std::future<SimMetrics>> jobs;
      for (int r = 0; r < opt.replicas; ++r)
        for (SimMode m : modes)
        {
          ScenarioConfig c = lc.config;
          c.rng_seed = lc.config.rng_seed + static_cast<std::uint64_t>(r);
          jobs.push_back(std::async(std::launch::async, [c, m] { return run_simulation(c, m); }));
        }
      std::vector<SimMetrics> runs;
      for (auto &j : jobs)
        runs.push_back(j.get());

      json runs_json = json::array();
      for (const auto &r : runs)
        runs_json.push_back(metrics_to_json(r));
      {
        auto out = open_out(dir / "metrics.json");
        out << json{{"runs", runs_json}, {"aggregate", aggregate_metrics(runs)}}.dump(2) << '\n';
      }
      {
        auto out = open_out(dir / "series.csv");
        write_series_csv(out, runs);
      }
      {
        auto out = open_out(dir / "density_bins.csv");
        write_density_csv(out, runs);
      }
      for (const auto &r : runs)
        for (int si = 0; si < kServiceCount; ++si)
        {
          const auto &sm = r.services[static_cast<std::size_t>(si)];
          log << "seed " << r.seed << ' ' << to_string(r.mode) << ' ' << to_string(static_cast<Service>(si))
              << ": success " << csv::num(sm.success_probability) << " over " << sm.sessions << " sessions, offload "
              << csv::num(sm.offload_fraction) << '\n';
        }
      finish_manifest(manifest, watch);
      return kExitOk;
    });
  }

  int cmd_estimate(const EstimateOptions &opt, std::ostream &log)
  {
    return guarded(log, "estimate", [&] {
      if (opt.synthetic == opt.reports_path.has_value())
        throw ValidationError("give exactly one of --reports <csv> or --synthetic");
      if (opt.sweep && !opt.synthetic)
        throw ValidationError("--sweep requires --synthetic");
      if (opt.trials < 1)
        throw ValidationError("--trials must be at least 1");

      const fs::path dir = resolve_output_dir(opt.out, "estimate");
      Stopwatch watch;
      RunManifest manifest{"estimate", "", "", opt.seed, opt.synthetic ? "synthetic" : "reports", dir.string()};

      if (opt.synthetic)
      {
        if (opt.rows < 1 || opt.cols < 1 || opt.rank < 1)
          throw ValidationError("--rows, --cols and --rank must be positive");
        const CompletionParams params = completion_params(opt, CompletionParams{});
        params.validate(static_cast<std::size_t>(opt.rows), static_cast<std::size_t>(opt.cols));
        const std::vector<double> rates = opt.sweep ? parse_sweep(*opt.sweep) : std::vector<double>{opt.sample_rate};
        for (double r : rates)
          if (!(r > 0.0 && r <= 1.0))
            throw ValidationError("sample rate must lie in (0, 1]");

        manifest.config_path = "<synthetic>";
        manifest.config_hash = hex_hash(json{{"rows", opt.rows}, {"cols", opt.cols}, {"rank", opt.rank}}.dump());
        manifest.extra = {{"rows", opt.rows}, {"cols", opt.cols}, {"rank", opt.rank}, {"trials", opt.trials},
                          {"sample_rates", rates}};
        write_manifest(manifest);

        auto out = open_out(dir / (opt.sweep ? "error_vs_entropy.csv" : "error.csv"));
        write_error_header(out);
        for (double rate : rates)
        {
          std::vector<TrialResult> trials;
          for (int k = 0; k < opt.trials; ++k)
          {
            TrafficMatrix observed;
            Eigen::MatrixXd estimate;
            const bool keep = !opt.sweep && k == 0;
            trials.push_back(synthetic_trial(opt, params, rate, opt.seed + static_cast<std::uint64_t>(k),
                                             keep ? &observed : nullptr, keep ? &estimate : nullptr));
            if (keep)
            {
              auto v = open_out(dir / "matrix_values.csv");
              write_matrix_values_csv(v, observed);
              auto m = open_out(dir / "matrix_mask.csv");
              write_matrix_mask_csv(m, observed);
              auto e = open_out(dir / "estimate.csv");
              write_estimate_csv(e, estimate);
            }
          }
          write_error_row(out, rate, trials);
          log << "sample_rate " << csv::num(rate) << ": error " << csv::num(trials.front().error) << '\n';
        }
        finish_manifest(manifest, watch);
        return kExitOk;
      }

      LoadedConfig lc = load_or(opt.config_path, &default_scenario);
      const std::string text = read_file(*opt.reports_path);
      manifest.config_path = lc.path;
      manifest.config_hash = lc.hash;
      manifest.extra = {{"reports_path", *opt.reports_path}, {"reports_hash", hex_hash(text)}};
      std::istringstream in(text);
      const auto reports = read_reports_csv(in);
      const RoadNetwork net = build_road_network(lc.config);
      int horizon = lc.config.horizon_cycles;
      for (const auto &r : reports)
        horizon = std::max(horizon, r.cycle_index + 1);
      const TrafficMatrix observed = build_traffic_matrix(reports, net, horizon);
      if (observed.observed_count() == 0)
        log << "estimate: warning: no report matched a road; the matrix is entirely unobserved\n";

      CompletionParams params = completion_params(opt, lc.config.completion);
      params.speed_max = lc.config.speed_limit_kmh;
      params.target_rank = std::min<int>(params.target_rank, static_cast<int>(std::min(observed.rows(), observed.cols())));
      write_manifest(manifest);

      const CompletionResult res = complete_matrix(observed, params);
      {
        auto v = open_out(dir / "matrix_values.csv");
        write_matrix_values_csv(v, observed);
        auto m = open_out(dir / "matrix_mask.csv");
        write_matrix_mask_csv(m, observed);
        auto e = open_out(dir / "estimate.csv");
        write_estimate_csv(e, res.estimate);
      }
      {
        // No ground truth for field reports: the error column is the fit on observed cells.
        auto out = open_out(dir / "error.csv");
        out << "observed_fraction,average_entropy,estimation_error,fit_residual,iterations,converged,all_empty\n";
        const double total = static_cast<double>(observed.rows() * observed.cols());
        out << csv::num(total > 0 ? observed.observed_count() / total : 0.0) << ','
            << csv::num(average_entropy(observed)) << ',' << csv::num(std::nan("")) << ','
            << csv::num(res.fit_residual) << ',' << res.iterations_used << ',' << (res.converged ? 1 : 0) << ','
            << (res.all_empty ? 1 : 0) << '\n';
      }
      finish_manifest(manifest, watch);
      return kExitOk;
    });
  }

  int cmd_recommend(const RecommendOptions &opt, std::ostream &log)
  {
    return guarded(log, "recommend", [&] {
      if (!opt.fresh && !opt.estimate_path)
        throw ValidationError("no traffic estimate: pass --estimate <csv> or --fresh");
      LoadedConfig lc = load_or(opt.config_path, &default_scenario);
      if (opt.seed)
        lc.config.rng_seed = *opt.seed;

      Eigen::MatrixXd estimate;
      std::string estimate_hash;
      if (opt.estimate_path)
      {
        const std::string text = read_file(*opt.estimate_path);
        std::istringstream in(text);
        estimate = read_estimate_csv(in);
        estimate_hash = hex_hash(text);
      }

      const fs::path dir = resolve_output_dir(opt.out, "recommend");
      Stopwatch watch;
      RunManifest manifest{"recommend", lc.path, lc.hash, lc.config.rng_seed, opt.fresh ? "fresh" : "estimate",
                           dir.string()};
      if (opt.estimate_path)
        manifest.extra = {{"estimate_path", *opt.estimate_path}, {"estimate_hash", estimate_hash}};
      write_manifest(manifest);

      const SensingRun run = sense_scenario(lc.config);
      if (opt.fresh)
      {
        const TrafficMatrix observed = build_traffic_matrix(run.reports, run.network, lc.config.horizon_cycles);
        CompletionParams params = lc.config.completion;
        params.speed_max = lc.config.speed_limit_kmh;
        params.target_rank =
            std::min<int>(params.target_rank, static_cast<int>(std::min(observed.rows(), observed.cols())));
        estimate = complete_matrix(observed, params).estimate;
        auto e = open_out(dir / "estimate.csv");
        write_estimate_csv(e, estimate);
      }
      else if (static_cast<std::size_t>(estimate.rows()) != run.network.size())
        throw ValidationError("estimate has " + std::to_string(estimate.rows()) + " rows but the network has " +
                              std::to_string(run.network.size()) + " segments");

      const auto rsus = deploy_rsus(lc.config.network, run.network, lc.config.social_spots);
      const RecommendationMap map = recommendation_map(
          estimate, {run.network, run.vehicles, rsus, lc.config.network.rsu_radius_m,
                     lc.config.recommendation.cell_size_m});
      for (Service s : {Service::Voice, Service::Video})
      {
        auto out = open_out(dir / ("recommendation_" + std::string(s == Service::Voice ? "voice" : "video") + ".csv"));
        const Service one[] = {s};
        write_recommendation_csv(out, map, one);
      }
      log << "recommend: " << map.cells.size() << " cells, " << rsus.size() << " RSUs\n";
      finish_manifest(manifest, watch);
      return kExitOk;
    });
  }

  int cmd_ahp(const AhpOptions &opt, std::ostream &out, std::ostream &log)
  {
    return guarded(log, "ahp", [&] {
      const std::string text = read_file(opt.matrix_path);
      std::istringstream in(text);
      const ComparisonMatrix m = ComparisonMatrix::from_rows(read_matrix_csv(in));
      const PriorityVector pv = priority_vector(m);
      const ConsistencyReport cr = consistency(m);
      if (opt.json)
      {
        out << json{{"weights", pv.weights},   {"lambda_max", cr.lambda_max}, {"ci", cr.ci},
                    {"ri", cr.ri},             {"cr", cr.cr},                 {"acceptable", cr.acceptable},
                    {"iterations", pv.iterations}}
                   .dump(2)
            << '\n';
        return kExitOk;
      }
      out << "index,weight\n";
      for (std::size_t i = 0; i < pv.weights.size(); ++i)
        out << i << ',' << csv::num(pv.weights[i]) << '\n';
      out << "lambda_max," << csv::num(cr.lambda_max) << '\n';
      out << "ci," << csv::num(cr.ci) << '\n';
      out << "cr," << csv::num(cr.cr) << '\n';
      out << "acceptable," << (cr.acceptable ? "true" : "false") << '\n';
      return kExitOk;
    });
  }

} // namespace trasonet
