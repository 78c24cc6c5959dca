/**
 * TrasoNET simulator.
 *
 * Grid city, social spots and the social-proximity mobility model: vehicles
 * live in a disc around a home spot, with areal density decaying as a power
 * law of the distance to the spot.
 */
#ifndef TRASONET_SCENARIO_HPP
#define TRASONET_SCENARIO_HPP

#include "trasonet/config.hpp"
#include "trasonet/rng.hpp"
#include "trasonet/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace trasonet
{

  enum class Axis
  {
    Vertical,  /**< runs along y at a fixed x */
    Horizontal /**< runs along x at a fixed y */
  };

  /** One block of street between two consecutive intersections. */
  struct Segment
  {
    SegmentId id = 0;
    Axis axis = Axis::Vertical;
    int street_index = 0; /**< which vertical (or horizontal) street */
    int block_index = 0;  /**< which block along that street */
    double start_m = 0.0; /**< coordinate along the street where the block starts */
    double end_m = 0.0;
    double length() const { return end_m - start_m; }
  };

  /** Intersection grid coordinates. */
  struct Node
  {
    int v = 0; /**< vertical street index (x) */
    int h = 0; /**< horizontal street index (y) */
    friend bool operator==(const Node &, const Node &) = default;
  };

  class RoadNetwork
  {
  public:
    RoadNetwork() = default;
    RoadNetwork(std::vector<double> xs, std::vector<double> ys, double speed_limit_kmh);

    std::span<const Segment> segments() const { return segments_; }
    const Segment &segment(SegmentId id) const { return segments_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return segments_.size(); }
    double speed_limit_kmh() const { return speed_limit_kmh_; }
    std::span<const double> xs() const { return xs_; }
    std::span<const double> ys() const { return ys_; }
    double width() const { return xs_.back() - xs_.front(); }
    double height() const { return ys_.back() - ys_.front(); }

    /** Mean block length, meters. */
    double segment_length_m() const;

    /** Point at `offset` meters from the segment start. */
    Point point_on(SegmentId id, double offset) const;
    Point start_point(SegmentId id) const { return point_on(id, 0.0); }
    Point end_point(SegmentId id) const { return point_on(id, segment(id).length()); }
    Point node_point(Node n) const { return {xs_[n.v], ys_[n.h]}; }

    Node start_node(SegmentId id) const;
    Node end_node(SegmentId id) const;

    /** Segments meeting at an intersection, ascending id. */
    std::vector<SegmentId> segments_at(Node n) const;

    /** Segments sharing an intersection with `id` (excluding itself), ascending id. */
    std::vector<SegmentId> neighbours(SegmentId id) const;

    /** Unit direction of travel from start to end. */
    Point direction(SegmentId id) const;

    /** Offset of the orthogonal projection of p onto the segment, clamped to the block. */
    double project(SegmentId id, Point p) const;

    /** Euclidean distance from p to the segment. */
    double distance_to(SegmentId id, Point p) const;

    SegmentId vertical_id(int v, int h) const { return v * (static_cast<int>(ys_.size()) - 1) + h; }
    SegmentId horizontal_id(int h, int v) const
    {
      return static_cast<int>(xs_.size()) * (static_cast<int>(ys_.size()) - 1) +
             h * (static_cast<int>(xs_.size()) - 1) + v;
    }

    /** Length of street lying inside the axis-aligned box [x0,x1] x [y0,y1]. */
    double street_length_in(double x0, double x1, double y0, double y1) const;

  private:
    std::vector<double> xs_;
    std::vector<double> ys_;
    std::vector<Segment> segments_;
    double speed_limit_kmh_ = 80.0;
  };

  struct SocialSpot
  {
    Point position;
    double mobility_radius_m = 2500.0;
    int n_tiers = 10;

    double tier_width() const { return mobility_radius_m / n_tiers; }
  };

  struct VehicleState
  {
    VehicleId vehicle_id = 0;
    int home_spot = 0;
    SegmentId segment = 0;
    double offset_m = 0.0; /**< distance from the segment start */
    int direction = 1;     /**< +1 towards the segment end, -1 towards its start */
    Point position;
    double speed_kmh = 0.0;
    Point heading; /**< unit vector */
    VehicleRole role = VehicleRole::Regular;
    std::optional<NetworkOption> current_network;
    std::optional<SessionState> active_session;
  };

  /** Planned patrol of one floating car. */
  struct FcRoute
  {
    VehicleId vehicle_id = 0;
    std::vector<SegmentId> segments; /**< segment occupied in each planned cycle */
    std::vector<Point> positions;    /**< reporting position in each planned cycle */
  };

  struct FcRoutePlan
  {
    int start_cycle = 0; /**< cycle of routes[k].segments[0] */
    std::vector<FcRoute> routes;

    const FcRoute *find(VehicleId id) const;
  };

  /** Throws ConfigError for an invalid config. Segment ids are dense and stable. */
  RoadNetwork build_road_network(const ScenarioConfig &config);

  std::vector<SocialSpot> social_spots(const ScenarioConfig &config);

  /** Tier probabilities: p_k proportional to mid_k^-gamma times the annulus area. */
  std::vector<double> tier_probabilities(const SocialSpot &spot, double gamma);

  /**
   * Sample the radial distance of one vehicle from its spot: a tier by
   * tier_probabilities, then a uniform-area position inside that annulus.
   */
  double sample_radius(const SocialSpot &spot, double gamma, Rng &rng);

  /**
   * A point on the street grid at (close to) distance r from the spot. Street
   * points exactly at distance r are chosen uniformly; when the circle misses
   * every street, the nearest street point inside the mobility disc is used.
   */
  std::optional<std::pair<SegmentId, double>> locate_on_streets(const RoadNetwork &net, const SocialSpot &spot,
                                                                 double r, Rng &rng);

  /**
   * Place n_vehicles with home spots drawn uniformly. Roles: the first
   * n_probe_vehicles are probe vehicles, the next n_floating_cars floating cars.
   */
  std::vector<VehicleState> place_vehicles(const ScenarioConfig &config, const RoadNetwork &network, Rng &rng);
  std::vector<VehicleState> place_vehicles(const ScenarioConfig &config, const RoadNetwork &network);

  /** Recompute position and heading from (segment, offset, direction). */
  void sync_geometry(VehicleState &v, const RoadNetwork &network);

  struct MobilityContext
  {
    const RoadNetwork &network;
    std::span<const SocialSpot> spots;
    double speed_limit_kmh = 80.0;
  };

  /**
   * Advance every vehicle by dt seconds at its current speed, then resample
   * its speed uniformly in [0, speed_limit]. At intersections a vehicle turns
   * uniformly among the other blocks whose far end stays inside its mobility
   * disc and reverses when there is none; it also reverses where its block
   * leaves the disc. Floating cars covered by `plan` jump to the planned
   * position for `cycle` instead.
   */
  void step_mobility(std::vector<VehicleState> &vehicles, const MobilityContext &ctx, double dt_s, Rng &rng,
                     const FcRoutePlan *plan = nullptr, int cycle = 0);

} // namespace trasonet

#endif // TRASONET_SCENARIO_HPP
