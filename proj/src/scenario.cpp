#include "trasonet/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace trasonet
{

  RoadNetwork::RoadNetwork(std::vector<double> xs, std::vector<double> ys, double speed_limit_kmh)
      : xs_(std::move(xs)), ys_(std::move(ys)), speed_limit_kmh_(speed_limit_kmh)
  {
    if (xs_.size() < 2 || ys_.size() < 2)
      throw ConfigError("road network needs at least two streets per axis");
    const int nv = static_cast<int>(xs_.size());
    const int nh = static_cast<int>(ys_.size());
    segments_.reserve(static_cast<std::size_t>(nv * (nh - 1) + nh * (nv - 1)));
    for (int v = 0; v < nv; ++v)
      for (int h = 0; h + 1 < nh; ++h)
        segments_.push_back({vertical_id(v, h), Axis::Vertical, v, h, ys_[h], ys_[h + 1]});
    for (int h = 0; h < nh; ++h)
      for (int v = 0; v + 1 < nv; ++v)
        segments_.push_back({horizontal_id(h, v), Axis::Horizontal, h, v, xs_[v], xs_[v + 1]});
  }

  double RoadNetwork::segment_length_m() const
  {
    double total = 0.0;
    for (const auto &s : segments_)
      total += s.length();
    return segments_.empty() ? 0.0 : total / static_cast<double>(segments_.size());
  }

  Point RoadNetwork::point_on(SegmentId id, double offset) const
  {
    const Segment &s = segment(id);
    if (s.axis == Axis::Vertical)
      return {xs_[s.street_index], s.start_m + offset};
    return {s.start_m + offset, ys_[s.street_index]};
  }

  Node RoadNetwork::start_node(SegmentId id) const
  {
    const Segment &s = segment(id);
    return s.axis == Axis::Vertical ? Node{s.street_index, s.block_index} : Node{s.block_index, s.street_index};
  }

  Node RoadNetwork::end_node(SegmentId id) const
  {
    const Segment &s = segment(id);
    return s.axis == Axis::Vertical ? Node{s.street_index, s.block_index + 1}
                                    : Node{s.block_index + 1, s.street_index};
  }

  std::vector<SegmentId> RoadNetwork::segments_at(Node n) const
  {
    const int nv = static_cast<int>(xs_.size());
    const int nh = static_cast<int>(ys_.size());
    std::vector<SegmentId> out;
    if (n.h > 0)
      out.push_back(vertical_id(n.v, n.h - 1));
    if (n.h < nh - 1)
      out.push_back(vertical_id(n.v, n.h));
    if (n.v > 0)
      out.push_back(horizontal_id(n.h, n.v - 1));
    if (n.v < nv - 1)
      out.push_back(horizontal_id(n.h, n.v));
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<SegmentId> RoadNetwork::neighbours(SegmentId id) const
  {
    std::vector<SegmentId> out;
    for (Node n : {start_node(id), end_node(id)})
      for (SegmentId s : segments_at(n))
        if (s != id)
          out.push_back(s);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  Point RoadNetwork::direction(SegmentId id) const
  {
    return segment(id).axis == Axis::Vertical ? Point{0.0, 1.0} : Point{1.0, 0.0};
  }

  double RoadNetwork::project(SegmentId id, Point p) const
  {
    const Segment &s = segment(id);
    const double along = s.axis == Axis::Vertical ? p.y : p.x;
    return std::clamp(along - s.start_m, 0.0, s.length());
  }

  double RoadNetwork::distance_to(SegmentId id, Point p) const { return distance(p, point_on(id, project(id, p))); }

  double RoadNetwork::street_length_in(double x0, double x1, double y0, double y1) const
  {
    // Half-open boxes so that tiling cells never count a street twice; the
    // far map border belongs to the last cell.
    auto inside = [](double c, double lo, double hi, double border) {
      return c >= lo && (c < hi || (hi >= border && c <= hi));
    };
    auto overlap = [](double a0, double a1, double b0, double b1) {
      return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
    };
    double total = 0.0;
    for (double x : xs_)
      if (inside(x, x0, x1, xs_.back()))
        total += overlap(ys_.front(), ys_.back(), y0, y1);
    for (double y : ys_)
      if (inside(y, y0, y1, ys_.back()))
        total += overlap(xs_.front(), xs_.back(), x0, x1);
    return total;
  }

  const FcRoute *FcRoutePlan::find(VehicleId id) const
  {
    for (const auto &r : routes)
      if (r.vehicle_id == id)
        return &r;
    return nullptr;
  }

  RoadNetwork build_road_network(const ScenarioConfig &config)
  {
    config.validate();
    std::vector<double> xs, ys;
    for (int i = 0; i < config.n_vertical_streets; ++i)
      xs.push_back(street_coordinate(i, config.n_vertical_streets, config.map_width_m));
    for (int j = 0; j < config.n_horizontal_streets; ++j)
      ys.push_back(street_coordinate(j, config.n_horizontal_streets, config.map_height_m));
    return RoadNetwork(std::move(xs), std::move(ys), config.speed_limit_kmh);
  }

  std::vector<SocialSpot> social_spots(const ScenarioConfig &config)
  {
    std::vector<SocialSpot> out;
    for (const auto &p : config.social_spots)
      out.push_back({p, config.mobility_radius_m, config.n_tiers});
    return out;
  }

  std::vector<double> tier_probabilities(const SocialSpot &spot, double gamma)
  {
    const double w = spot.tier_width();
    std::vector<double> p(static_cast<std::size_t>(spot.n_tiers));
    for (int k = 0; k < spot.n_tiers; ++k)
    {
      const double inner = k * w, outer = (k + 1) * w;
      const double mid = 0.5 * (inner + outer);
      p[k] = std::pow(mid, -gamma) * (outer * outer - inner * inner);
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double &x : p)
      x /= total;
    return p;
  }

  double sample_radius(const SocialSpot &spot, double gamma, Rng &rng)
  {
    const auto p = tier_probabilities(spot, gamma);
    double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < p.size() && u >= p[k])
    {
      u -= p[k];
      ++k;
    }
    const double inner = k * spot.tier_width(), outer = (k + 1) * spot.tier_width();
    return std::sqrt(rng.uniform(inner * inner, outer * outer));
  }

  namespace
  {
    int block_of(std::span<const double> coords, double c)
    {
      auto it = std::upper_bound(coords.begin(), coords.end(), c);
      const int idx = static_cast<int>(it - coords.begin()) - 1;
      return std::clamp(idx, 0, static_cast<int>(coords.size()) - 2);
    }
  } // namespace

  std::optional<std::pair<SegmentId, double>> locate_on_streets(const RoadNetwork &net, const SocialSpot &spot,
                                                                 double r, Rng &rng)
  {
    std::vector<std::pair<SegmentId, double>> hits;
    const auto xs = net.xs();
    const auto ys = net.ys();
    const Point c = spot.position;
    for (int v = 0; v < static_cast<int>(xs.size()); ++v)
    {
      const double dx = xs[v] - c.x;
      if (std::abs(dx) > r)
        continue;
      const double dy = std::sqrt(std::max(0.0, r * r - dx * dx));
      for (double y : {c.y - dy, c.y + dy})
      {
        if (y < ys.front() || y > ys.back())
          continue;
        const int h = block_of(ys, y);
        hits.emplace_back(net.vertical_id(v, h), y - ys[h]);
        if (dy == 0.0)
          break;
      }
    }
    for (int h = 0; h < static_cast<int>(ys.size()); ++h)
    {
      const double dy = ys[h] - c.y;
      if (std::abs(dy) > r)
        continue;
      const double dx = std::sqrt(std::max(0.0, r * r - dy * dy));
      for (double x : {c.x - dx, c.x + dx})
      {
        if (x < xs.front() || x > xs.back())
          continue;
        const int v = block_of(xs, x);
        hits.emplace_back(net.horizontal_id(h, v), x - xs[v]);
        if (dx == 0.0)
          break;
      }
    }
    if (!hits.empty())
      return hits[rng.index(hits.size())];

    // The circle misses every street: fall back to the street point nearest the spot.
    SegmentId best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto &s : net.segments())
    {
      const double d = net.distance_to(s.id, c);
      if (d < best_d)
      {
        best_d = d;
        best = s.id;
      }
    }
    if (best < 0 || best_d > spot.mobility_radius_m)
      return std::nullopt;
    return std::make_pair(best, net.project(best, c));
  }

  void sync_geometry(VehicleState &v, const RoadNetwork &network)
  {
    v.position = network.point_on(v.segment, v.offset_m);
    const Point d = network.direction(v.segment);
    v.heading = {d.x * v.direction, d.y * v.direction};
  }

  std::vector<VehicleState> place_vehicles(const ScenarioConfig &config, const RoadNetwork &network, Rng &rng)
  {
    const auto spots = social_spots(config);
    std::vector<VehicleState> out;
    out.reserve(static_cast<std::size_t>(config.n_vehicles));
    for (int i = 0; i < config.n_vehicles; ++i)
    {
      VehicleState v;
      v.vehicle_id = i;
      v.home_spot = static_cast<int>(rng.index(spots.size()));
      const SocialSpot &spot = spots[static_cast<std::size_t>(v.home_spot)];
      const double r = sample_radius(spot, config.gamma, rng);
      const auto where = locate_on_streets(network, spot, r, rng);
      if (!where)
        throw ConfigError("social spot has no street inside its mobility radius");
      v.segment = where->first;
      v.offset_m = where->second;
      v.direction = rng.bernoulli(0.5) ? 1 : -1;
      v.speed_kmh = rng.uniform(0.0, config.speed_limit_kmh);
      if (i < config.n_probe_vehicles)
        v.role = VehicleRole::ProbeVehicle;
      else if (i < config.n_probe_vehicles + config.n_floating_cars)
        v.role = VehicleRole::FloatingCar;
      sync_geometry(v, network);
      out.push_back(std::move(v));
    }
    return out;
  }

  std::vector<VehicleState> place_vehicles(const ScenarioConfig &config, const RoadNetwork &network)
  {
    Rng rng = Rng::stream(config.rng_seed, "placement");
    return place_vehicles(config, network, rng);
  }

  namespace
  {
    constexpr double kBoundaryEps = 1e-9;

    /** Distance the vehicle may travel along its heading before leaving the disc. */
    double exit_distance(Point p, Point heading, Point centre, double radius)
    {
      const double ox = p.x - centre.x, oy = p.y - centre.y;
      const double b = heading.x * ox + heading.y * oy;
      const double c = ox * ox + oy * oy - radius * radius;
      const double disc = b * b - c;
      if (disc < 0)
        return 0.0;
      return std::max(0.0, -b + std::sqrt(disc) - kBoundaryEps);
    }

    void move_one(VehicleState &v, const MobilityContext &ctx, double distance_m, Rng &rng)
    {
      const RoadNetwork &net = ctx.network;
      const SocialSpot &spot = ctx.spots[static_cast<std::size_t>(v.home_spot)];
      const double radius = spot.mobility_radius_m;
      double remaining = distance_m;
      for (int guard = 0; guard < 10000 && remaining > 0.0; ++guard)
      {
        sync_geometry(v, net);
        const double len = net.segment(v.segment).length();
        const double to_end = v.direction > 0 ? len - v.offset_m : v.offset_m;
        const Point far = v.direction > 0 ? net.end_point(v.segment) : net.start_point(v.segment);
        double limit = to_end;
        bool boundary = false;
        if (distance(far, spot.position) > radius)
        {
          limit = std::min(to_end, exit_distance(v.position, v.heading, spot.position, radius));
          boundary = true;
        }
        if (remaining <= limit)
        {
          v.offset_m += v.direction * remaining;
          break;
        }
        v.offset_m += v.direction * limit;
        remaining -= limit;
        if (boundary)
        {
          v.direction = -v.direction;
          continue;
        }
        // At an intersection.
        v.offset_m = v.direction > 0 ? len : 0.0;
        const Node node = v.direction > 0 ? net.end_node(v.segment) : net.start_node(v.segment);
        std::vector<SegmentId> options;
        for (SegmentId s : net.segments_at(node))
        {
          if (s == v.segment)
            continue;
          const Point other_end = net.start_node(s) == node ? net.end_point(s) : net.start_point(s);
          if (distance(other_end, spot.position) <= radius)
            options.push_back(s);
        }
        if (options.empty())
        {
          v.direction = -v.direction;
          continue;
        }
        const SegmentId next = options[rng.index(options.size())];
        if (net.start_node(next) == node)
        {
          v.segment = next;
          v.offset_m = 0.0;
          v.direction = 1;
        }
        else
        {
          v.segment = next;
          v.offset_m = net.segment(next).length();
          v.direction = -1;
        }
      }
      v.offset_m = std::clamp(v.offset_m, 0.0, net.segment(v.segment).length());
      sync_geometry(v, net);
    }
  } // namespace

  void step_mobility(std::vector<VehicleState> &vehicles, const MobilityContext &ctx, double dt_s, Rng &rng,
                     const FcRoutePlan *plan, int cycle)
  {
    if (!(dt_s > 0))
      throw ValidationError("step_mobility: dt must be positive");
    for (auto &v : vehicles)
    {
      const FcRoute *route = nullptr;
      if (plan && v.role == VehicleRole::FloatingCar)
        route = plan->find(v.vehicle_id);
      const int k = cycle - (plan ? plan->start_cycle : 0);
      if (route && k >= 0 && k < static_cast<int>(route->segments.size()))
      {
        v.segment = route->segments[static_cast<std::size_t>(k)];
        v.offset_m = ctx.network.segment(v.segment).length() / 2.0;
        sync_geometry(v, ctx.network);
        if (k < static_cast<int>(route->positions.size()))
          v.position = route->positions[static_cast<std::size_t>(k)];
      }
      else
      {
        move_one(v, ctx, v.speed_kmh / 3.6 * dt_s, rng);
      }
      v.speed_kmh = rng.uniform(0.0, ctx.speed_limit_kmh);
    }
  }

} // namespace trasonet
