#include "trasonet/sensing.hpp"

#include "trasonet/csv.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>

namespace trasonet
{

  int TrafficMatrix::row_count(std::size_t i) const
  {
    int n = 0;
    for (std::size_t j = 0; j < cols_; ++j)
      n += mask_[i * cols_ + j];
    return n;
  }

  std::size_t TrafficMatrix::observed_count() const
  {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
  }

  std::vector<GpsReport> emit_reports(std::span<const VehicleState> vehicles, int cycle_index)
  {
    std::vector<GpsReport> out;
    for (const auto &v : vehicles)
    {
      if (v.role == VehicleRole::Regular)
        continue;
      out.push_back({v.vehicle_id, cycle_index, v.position, v.speed_kmh, v.heading});
    }
    return out;
  }

  std::optional<SegmentId> map_match(const GpsReport &report, const RoadNetwork &network, double capture_radius_m)
  {
    const Point p = report.position;
    const auto xs = network.xs();
    const auto ys = network.ys();
    SegmentId best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    auto consider = [&](SegmentId id) {
      const double d = network.distance_to(id, p);
      if (d < best_d || (d == best_d && id < best))
      {
        best_d = d;
        best = id;
      }
    };
    // Only streets within the capture radius can match; on each such street,
    // only blocks whose span (widened by the radius) contains the point.
    for (int v = 0; v < static_cast<int>(xs.size()); ++v)
    {
      if (std::abs(xs[v] - p.x) > capture_radius_m)
        continue;
      for (int h = 0; h + 1 < static_cast<int>(ys.size()); ++h)
        if (p.y >= ys[h] - capture_radius_m && p.y <= ys[h + 1] + capture_radius_m)
          consider(network.vertical_id(v, h));
    }
    for (int h = 0; h < static_cast<int>(ys.size()); ++h)
    {
      if (std::abs(ys[h] - p.y) > capture_radius_m)
        continue;
      for (int v = 0; v + 1 < static_cast<int>(xs.size()); ++v)
        if (p.x >= xs[v] - capture_radius_m && p.x <= xs[v + 1] + capture_radius_m)
          consider(network.horizontal_id(h, v));
    }
    if (best < 0 || best_d > capture_radius_m)
      return std::nullopt;
    return best;
  }

  TrafficMatrix build_traffic_matrix(std::span<const GpsReport> reports, const RoadNetwork &network,
                                     int horizon_cycles)
  {
    const std::size_t rows = network.size();
    const auto cols = static_cast<std::size_t>(std::max(horizon_cycles, 0));
    std::vector<double> sum(rows * cols, 0.0);
    std::vector<int> count(rows * cols, 0);
    for (const auto &r : reports)
    {
      if (r.cycle_index < 0 || r.cycle_index >= horizon_cycles)
        continue;
      const auto seg = map_match(r, network);
      if (!seg)
        continue;
      const std::size_t k = static_cast<std::size_t>(*seg) * cols + static_cast<std::size_t>(r.cycle_index);
      sum[k] += r.speed_kmh;
      ++count[k];
    }
    TrafficMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        if (const int n = count[i * cols + j]; n > 0)
          m.set(i, j, sum[i * cols + j] / n);
    return m;
  }

  Coverage coverage_stats(const TrafficMatrix &matrix)
  {
    if (matrix.empty())
      return {};
    std::size_t covered = 0;
    double time_sum = 0.0;
    for (std::size_t i = 0; i < matrix.rows(); ++i)
    {
      const int n = matrix.row_count(i);
      if (n == 0)
        continue;
      ++covered;
      time_sum += static_cast<double>(n) / static_cast<double>(matrix.cols());
    }
    if (covered == 0)
      return {};
    return {static_cast<double>(covered) / static_cast<double>(matrix.rows()), time_sum / static_cast<double>(covered)};
  }

  double count_entropy(std::span<const int> row_counts)
  {
    if (row_counts.empty())
      return 0.0;
    std::map<int, int> histogram;
    for (int c : row_counts)
      ++histogram[c];
    const double n = static_cast<double>(row_counts.size());
    double h = 0.0;
    for (const auto &[count, rows] : histogram)
    {
      const double p = rows / n;
      h -= p * std::log(p);
    }
    return h;
  }

  double average_entropy(const TrafficMatrix &matrix)
  {
    std::vector<int> counts(matrix.rows());
    for (std::size_t i = 0; i < matrix.rows(); ++i)
      counts[i] = matrix.row_count(i);
    return count_entropy(counts);
  }

  namespace
  {
    std::vector<SegmentId> default_starts(int n_fc, const RoadNetwork &network, const FcPlanOptions &options)
    {
      if (!options.start_segments.empty())
      {
        if (static_cast<int>(options.start_segments.size()) != n_fc)
          throw ValidationError("plan_fc_routes: one start segment per floating car is required");
        return options.start_segments;
      }
      std::vector<SegmentId> out;
      const auto n = static_cast<long>(network.size());
      for (int k = 0; k < n_fc; ++k)
        out.push_back(static_cast<SegmentId>(k * n / n_fc));
      return out;
    }

    std::vector<VehicleId> default_ids(int n_fc, const FcPlanOptions &options)
    {
      if (!options.vehicle_ids.empty())
        return options.vehicle_ids;
      std::vector<VehicleId> out(static_cast<std::size_t>(n_fc));
      for (int k = 0; k < n_fc; ++k)
        out[static_cast<std::size_t>(k)] = k;
      return out;
    }

    Point midpoint(const RoadNetwork &net, SegmentId s) { return net.point_on(s, net.segment(s).length() / 2.0); }

    /** The node a car on `seg` arrived through, given where it was before. */
    Node forward_node(const RoadNetwork &net, SegmentId prev, SegmentId seg)
    {
      const Node a = net.start_node(seg), b = net.end_node(seg);
      if (prev < 0 || prev == seg)
        return b;
      const Node pa = net.start_node(prev), pb = net.end_node(prev);
      // Entered through the shared node, so heading to the other end.
      return (a == pa || a == pb) ? b : a;
    }
  } // namespace

  FcRoutePlan plan_fc_routes(int n_fc, const TrafficMatrix &observed_so_far, const RoadNetwork &network, int horizon,
                             const FcPlanOptions &options)
  {
    FcRoutePlan plan;
    plan.start_cycle = options.start_cycle;
    if (n_fc <= 0 || horizon <= 0)
      return plan;
    if (observed_so_far.rows() != network.size())
      throw ValidationError("plan_fc_routes: matrix rows must match the network");

    std::vector<int> counts(network.size(), 0);
    for (std::size_t i = 0; i < network.size(); ++i)
      counts[i] = observed_so_far.row_count(i);

    const auto starts = default_starts(n_fc, network, options);
    const auto ids = default_ids(n_fc, options);
    std::vector<SegmentId> current = starts;
    std::vector<SegmentId> previous(static_cast<std::size_t>(n_fc), -1);
    plan.routes.resize(static_cast<std::size_t>(n_fc));
    for (int k = 0; k < n_fc; ++k)
      plan.routes[static_cast<std::size_t>(k)].vehicle_id = ids[static_cast<std::size_t>(k)];

    for (int t = 0; t < horizon; ++t)
    {
      const int cycle = plan.start_cycle + t;
      std::set<SegmentId> visited_now;
      for (int k = 0; k < n_fc; ++k)
      {
        const auto ku = static_cast<std::size_t>(k);
        const SegmentId s = current[ku];
        const Node ahead = forward_node(network, previous[ku], s);
        SegmentId straight = -1;
        for (SegmentId c : network.segments_at(ahead))
          if (c != s && network.segment(c).axis == network.segment(s).axis)
            straight = c;

        // neighbours() is ascending, so strict < keeps the lowest id among ties.
        SegmentId best = s;
        int best_count = std::numeric_limits<int>::max();
        for (SegmentId c : network.neighbours(s))
          if (counts[c] < best_count)
          {
            best = c;
            best_count = counts[c];
          }
        if (straight >= 0 && counts[straight] == best_count)
          best = straight;

        const bool already = cycle >= 0 && static_cast<std::size_t>(cycle) < observed_so_far.cols() &&
                             observed_so_far.observed(static_cast<std::size_t>(best), static_cast<std::size_t>(cycle));
        if (!already && visited_now.insert(best).second)
          ++counts[best];

        previous[ku] = s;
        current[ku] = best;
        plan.routes[ku].segments.push_back(best);
        plan.routes[ku].positions.push_back(midpoint(network, best));
      }
    }
    return plan;
  }

  FcRoutePlan random_fc_routes(int n_fc, const RoadNetwork &network, int horizon, Rng &rng,
                               const FcPlanOptions &options)
  {
    FcRoutePlan plan;
    plan.start_cycle = options.start_cycle;
    if (n_fc <= 0 || horizon <= 0)
      return plan;
    const auto starts = default_starts(n_fc, network, options);
    const auto ids = default_ids(n_fc, options);
    plan.routes.resize(static_cast<std::size_t>(n_fc));
    for (int k = 0; k < n_fc; ++k)
    {
      auto &route = plan.routes[static_cast<std::size_t>(k)];
      route.vehicle_id = ids[static_cast<std::size_t>(k)];
      SegmentId s = starts[static_cast<std::size_t>(k)];
      for (int t = 0; t < horizon; ++t)
      {
        const auto options_here = network.neighbours(s);
        s = options_here[rng.index(options_here.size())];
        route.segments.push_back(s);
        route.positions.push_back(midpoint(network, s));
      }
    }
    return plan;
  }

  // -- CSV -------------------------------------------------------------------

  void write_reports_csv(std::ostream &out, std::span<const GpsReport> reports)
  {
    out << "vehicle_id,cycle,x,y,speed,heading\n";
    for (const auto &r : reports)
    {
      double deg = std::atan2(r.heading.y, r.heading.x) * 180.0 / M_PI;
      if (deg < 0)
        deg += 360.0;
      out << r.vehicle_id << ',' << r.cycle_index << ',' << csv::num(r.position.x) << ',' << csv::num(r.position.y)
          << ',' << csv::num(r.speed_kmh) << ',' << csv::num(deg) << '\n';
    }
  }

  std::vector<GpsReport> read_reports_csv(std::istream &in)
  {
    std::vector<GpsReport> out;
    const auto rows = csv::lines(in);
    for (std::size_t n = 0; n < rows.size(); ++n)
    {
      const auto f = csv::split(rows[n]);
      if (n == 0 && !f.empty() && f[0] == "vehicle_id")
        continue;
      if (f.size() != 6)
        throw ValidationError("reports CSV: expected 6 fields on line " + std::to_string(n + 1));
      try
      {
        GpsReport r;
        r.vehicle_id = std::stoi(f[0]);
        r.cycle_index = std::stoi(f[1]);
        r.position = {std::stod(f[2]), std::stod(f[3])};
        r.speed_kmh = std::stod(f[4]);
        const double rad = std::stod(f[5]) * M_PI / 180.0;
        r.heading = {std::cos(rad), std::sin(rad)};
        out.push_back(r);
      }
      catch (const std::logic_error &)
      {
        throw ValidationError("reports CSV: bad number on line " + std::to_string(n + 1));
      }
    }
    return out;
  }

  void write_matrix_values_csv(std::ostream &out, const TrafficMatrix &m)
  {
    out << "segment_id";
    for (std::size_t j = 0; j < m.cols(); ++j)
      out << ",cycle_" << j;
    out << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i)
    {
      out << i;
      for (std::size_t j = 0; j < m.cols(); ++j)
        out << ',' << (m.observed(i, j) ? csv::num(m.value(i, j)) : std::string("nan"));
      out << '\n';
    }
  }

  void write_matrix_mask_csv(std::ostream &out, const TrafficMatrix &m)
  {
    out << "segment_id";
    for (std::size_t j = 0; j < m.cols(); ++j)
      out << ",cycle_" << j;
    out << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i)
    {
      out << i;
      for (std::size_t j = 0; j < m.cols(); ++j)
        out << ',' << (m.observed(i, j) ? 1 : 0);
      out << '\n';
    }
  }

} // namespace trasonet
