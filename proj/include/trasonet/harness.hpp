/**
 * TrasoNET simulator.
 *
 * Command implementations behind the CLI. Each returns a process exit code:
 * 0 success, 2 unreadable or invalid input, 3 runtime invariant violation.
 */
#ifndef TRASONET_HARNESS_HPP
#define TRASONET_HARNESS_HPP

#include "trasonet/netsim.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace trasonet
{

  inline constexpr int kExitOk = 0;
  inline constexpr int kExitIo = 1;
  inline constexpr int kExitParse = 2;
  inline constexpr int kExitInvariant = 3;

  inline constexpr const char *kOutputRootEnv = "TRASONET_OUTPUT_ROOT";

  struct RunManifest
  {
    std::string command;
    std::string config_path;
    std::string config_hash; /**< fnv1a64 of the config bytes, hex; of the canonical dump for built-ins */
    std::uint64_t seed = 0;
    std::string mode;
    std::string output_dir;
    double wall_clock_s = 0.0;
    std::string status = "running";
    nlohmann::json extra = nlohmann::json::object();
  };

  nlohmann::json manifest_to_json(const RunManifest &m);
  void write_manifest(const RunManifest &m);

  /** --out if given, else $TRASONET_OUTPUT_ROOT/<command>, else ./trasonet_out/<command>. */
  std::filesystem::path resolve_output_dir(const std::optional<std::string> &out, const std::string &command);

  std::string hex_hash(std::string_view bytes);

  struct SimulateOptions
  {
    std::optional<std::string> config_path; /**< built-in desk scenario when absent */
    std::optional<std::uint64_t> seed;
    std::string mode = "both"; /**< baseline | trasonet | both */
    int replicas = 1;
    std::optional<std::string> out;
  };

  struct EstimateOptions
  {
    std::optional<std::string> reports_path;
    bool synthetic = false;
    std::optional<std::string> config_path; /**< road network for reports input */
    int rows = 100;
    int cols = 96;
    int rank = 4;
    double sample_rate = 0.3;
    std::uint64_t seed = 1;
    int trials = 1;
    std::optional<std::string> sweep; /**< "sample_rate=0.1,0.2,..." */
    std::optional<int> target_rank;
    std::optional<int> max_iterations;
    std::optional<double> tol;
    std::optional<std::string> out;
  };

  struct RecommendOptions
  {
    std::optional<std::string> config_path; /**< built-in default scenario when absent */
    std::optional<std::string> estimate_path;
    bool fresh = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
  };

  struct AhpOptions
  {
    std::string matrix_path;
    bool json = false;
  };

  int cmd_simulate(const SimulateOptions &opt, std::ostream &log);
  int cmd_estimate(const EstimateOptions &opt, std::ostream &log);
  int cmd_recommend(const RecommendOptions &opt, std::ostream &log);
  int cmd_ahp(const AhpOptions &opt, std::ostream &out, std::ostream &log);

  /** Square matrix CSV; entries may be decimals or fractions such as 1/3. */
  std::vector<std::vector<double>> read_matrix_csv(std::istream &in);

  /** Parse "sample_rate=0.1,0.2"; throws ValidationError for other keys or bad numbers. */
  std::vector<double> parse_sweep(const std::string &spec);

  /** Mean and population standard deviation of per-replica metrics, per mode and service. */
  nlohmann::json aggregate_metrics(const std::vector<SimMetrics> &runs);

} // namespace trasonet

#endif // TRASONET_HARNESS_HPP
