/**
 * TrasoNET simulator.
 *
 * Vocabulary types shared by every module.
 */
#ifndef TRASONET_TYPES_HPP
#define TRASONET_TYPES_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trasonet
{

  /** Thrown when a configuration document or parameter set is invalid. */
  class ConfigError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  /** Thrown on malformed numeric input (non-reciprocal matrix, bad CSV, ...). */
  class ValidationError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  /** Thrown when a runtime invariant of the simulation is broken. */
  class InvariantViolation : public std::logic_error
  {
  public:
    using std::logic_error::logic_error;
  };

  struct Point
  {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point &, const Point &) = default;
  };

  inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

  enum class NetworkOption
  {
    Cellular = 0,
    VANET = 1
  };
  inline constexpr int kNetworkCount = 2;

  enum class Service
  {
    Voice = 0,
    Video = 1
  };
  inline constexpr int kServiceCount = 2;

  enum class VehicleRole
  {
    Regular,
    ProbeVehicle,
    FloatingCar
  };

  inline NetworkOption other(NetworkOption o)
  {
    return o == NetworkOption::Cellular ? NetworkOption::VANET : NetworkOption::Cellular;
  }

  std::string_view to_string(NetworkOption o);
  std::string_view to_string(Service s);
  std::string_view to_string(VehicleRole r);
  NetworkOption parse_network(std::string_view s);
  Service parse_service(std::string_view s);

  using SegmentId = std::int32_t;
  using VehicleId = std::int32_t;

  /** One data session carried by a vehicle. */
  struct SessionState
  {
    Service service = Service::Voice;
    double demand_mbps = 0.0;
    double remaining_s = 0.0;
    double duration_s = 0.0;
    NetworkOption attached_network = NetworkOption::Cellular;
    std::vector<double> achieved_rate_history; /**< Mbps per cycle */
    std::vector<double> delay_history;         /**< ms per cycle */
    double cost_accrued = 0.0;                 /**< RMB */
    double start_density = 0.0;                /**< veh/m where the session started */
    int handovers = 0;
  };

} // namespace trasonet

#endif // TRASONET_TYPES_HPP
