#include "trasonet/ahp.hpp"

#include "trasonet/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace trasonet
{

  ComparisonMatrix::ComparisonMatrix(std::size_t n, std::vector<double> entries) : n_(n), a_(std::move(entries))
  {
    if (n_ == 0 || a_.size() != n_ * n_)
      throw ValidationError("comparison matrix must be square and non-empty");
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
      {
        const double aij = a_[i * n_ + j];
        if (!(aij > 0) || !std::isfinite(aij))
          throw ValidationError("comparison matrix entries must be positive and finite");
        if (i == j && std::abs(aij - 1.0) > kReciprocalTol)
          throw ValidationError("comparison matrix diagonal must be 1");
        const double inv = 1.0 / a_[j * n_ + i];
        if (std::abs(aij - inv) > kReciprocalTol * std::max(1.0, aij))
          throw ValidationError("comparison matrix must be reciprocal (a_ij = 1/a_ji)");
      }
  }

  ComparisonMatrix ComparisonMatrix::from_rows(const std::vector<std::vector<double>> &rows)
  {
    std::vector<double> flat;
    for (const auto &r : rows)
    {
      if (r.size() != rows.size())
        throw ValidationError("comparison matrix must be square");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return ComparisonMatrix(rows.size(), std::move(flat));
  }

  ComparisonMatrix ComparisonMatrix::from_weights(std::span<const double> weights)
  {
    const std::size_t n = weights.size();
    std::vector<double> flat(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        flat[i * n + j] = i == j ? 1.0 : weights[i] / weights[j];
    return ComparisonMatrix(n, std::move(flat));
  }

  PriorityVector priority_vector(const ComparisonMatrix &m, std::span<const double> start)
  {
    constexpr double kTol = 1e-12;
    constexpr int kMaxIterations = 10000;
    const std::size_t n = m.size();
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    if (!start.empty())
    {
      if (start.size() != n)
        throw ValidationError("priority_vector: start vector has the wrong length");
      const double s = std::accumulate(start.begin(), start.end(), 0.0);
      if (!(s > 0) || std::any_of(start.begin(), start.end(), [](double x) { return x < 0; }))
        throw ValidationError("priority_vector: start vector must be non-negative and non-zero");
      for (std::size_t i = 0; i < n; ++i)
        w[i] = start[i] / s;
    }

    PriorityVector out;
    std::vector<double> next(n);
    double lambda = 0.0;
    for (int it = 1; it <= kMaxIterations; ++it)
    {
      for (std::size_t i = 0; i < n; ++i)
      {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          acc += m(i, j) * w[j];
        next[i] = acc;
      }
      // With sum(w) = 1, sum(A w) -> lambda_max.
      lambda = std::accumulate(next.begin(), next.end(), 0.0);
      double change = 0.0;
      for (std::size_t i = 0; i < n; ++i)
      {
        next[i] /= lambda;
        change += std::abs(next[i] - w[i]);
      }
      w.swap(next);
      out.iterations = it;
      if (change < kTol)
        break;
    }
    out.weights = std::move(w);
    out.lambda_max = lambda;
    return out;
  }

  double random_index(std::size_t n)
  {
    static constexpr std::array<double, 10> kRi = {0.0, 0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45};
    if (n < 1 || n > 9)
      throw ValidationError("consistency: unsupported dimension " + std::to_string(n) + " (RI known for n <= 9)");
    return kRi[n];
  }

  ConsistencyReport consistency(const ComparisonMatrix &m)
  {
    const std::size_t n = m.size();
    ConsistencyReport r;
    r.ri = random_index(n);
    r.lambda_max = priority_vector(m).lambda_max;
    if (n >= 2)
      r.ci = (r.lambda_max - static_cast<double>(n)) / static_cast<double>(n - 1);
    r.cr = n >= 3 ? r.ci / r.ri : 0.0;
    r.acceptable = r.cr < 0.1;
    return r;
  }

  ComparisonMatrix service_criteria_matrix(Service s)
  {
    // Criterion order: traffic density, bandwidth, delay, cost.
    if (s == Service::Voice)
      return ComparisonMatrix::from_rows({{1, 5, 3, 7}, {1.0 / 5, 1, 1.0 / 3, 5}, {1.0 / 3, 3, 1, 5}, {1.0 / 7, 1.0 / 5, 1.0 / 5, 1}});
    return ComparisonMatrix::from_rows({{1, 1.0 / 7, 1.0 / 5, 1.0 / 3}, {7, 1, 3, 5}, {5, 1.0 / 3, 1, 3}, {3, 1.0 / 5, 1.0 / 3, 1}});
  }

  double density_judgment(double vehicles_per_m)
  {
    if (vehicles_per_m < 0.01)
      return 5.0;
    if (vehicles_per_m < 0.02)
      return 3.0;
    if (vehicles_per_m < 0.04)
      return 1.0;
    if (vehicles_per_m < 0.06)
      return 1.0 / 3.0;
    return 1.0 / 5.0;
  }

  ComparisonMatrix score_alternatives(const CellState &cell, Criterion criterion)
  {
    if (cell.vehicle_density < 0)
      throw ValidationError("score_alternatives: density must be non-negative");
    // vanet_over_cellular = a(VANET, Cellular); the matrix is over {Cellular, VANET}.
    double vanet_over_cellular = 1.0 / 9.0;
    if (cell.rsu_coverage)
    {
      switch (criterion)
      {
      case Criterion::TrafficDensity:
        vanet_over_cellular = density_judgment(cell.vehicle_density);
        break;
      case Criterion::Bandwidth:
        vanet_over_cellular = 5.0;
        break;
      case Criterion::Delay:
        vanet_over_cellular = 1.0 / 5.0;
        break;
      case Criterion::Cost:
        vanet_over_cellular = 7.0;
        break;
      }
    }
    return ComparisonMatrix(2, {1.0, 1.0 / vanet_over_cellular, vanet_over_cellular, 1.0});
  }

  std::vector<double> synthesize(const PriorityVector &criteria_weights,
                                 std::span<const PriorityVector> per_criterion_alternatives)
  {
    if (criteria_weights.weights.size() != per_criterion_alternatives.size() || per_criterion_alternatives.empty())
      throw ValidationError("synthesize: one alternative vector per criterion is required");
    const std::size_t n_alt = per_criterion_alternatives.front().weights.size();
    std::vector<double> index(n_alt, 0.0);
    for (std::size_t c = 0; c < per_criterion_alternatives.size(); ++c)
    {
      const auto &alt = per_criterion_alternatives[c].weights;
      if (alt.size() != n_alt)
        throw ValidationError("synthesize: alternative vectors differ in length");
      for (std::size_t a = 0; a < n_alt; ++a)
        index[a] += criteria_weights.weights[c] * alt[a];
    }
    const double total = std::accumulate(index.begin(), index.end(), 0.0);
    if (total > 0)
      for (double &x : index)
        x /= total;
    return index;
  }

  std::array<double, kNetworkCount> recommend_cell(const CellState &cell, Service service)
  {
    static const PriorityVector kVoice = priority_vector(service_criteria_matrix(Service::Voice));
    static const PriorityVector kVideo = priority_vector(service_criteria_matrix(Service::Video));
    std::vector<PriorityVector> alternatives;
    for (int c = 0; c < kCriterionCount; ++c)
      alternatives.push_back(priority_vector(score_alternatives(cell, static_cast<Criterion>(c))));
    const auto idx = synthesize(service == Service::Voice ? kVoice : kVideo, alternatives);
    return {idx[0], idx[1]};
  }

  const RecommendationCell &RecommendationMap::at(Point p) const
  {
    const int cx = std::clamp(static_cast<int>(std::floor(p.x / cell_size_m)), 0, nx - 1);
    const int cy = std::clamp(static_cast<int>(std::floor(p.y / cell_size_m)), 0, ny - 1);
    return at(cx, cy);
  }

  namespace
  {
    double box_distance(Point p, double x0, double x1, double y0, double y1)
    {
      const double dx = std::max({x0 - p.x, 0.0, p.x - x1});
      const double dy = std::max({y0 - p.y, 0.0, p.y - y1});
      return std::hypot(dx, dy);
    }
  } // namespace

  RecommendationMap recommendation_map(const Eigen::MatrixXd &traffic_estimate, const RecommendationInputs &in)
  {
    const RoadNetwork &net = in.network;
    if (!(in.cell_size_m > 0))
      throw ValidationError("recommendation_map: cell size must be positive");
    RecommendationMap map;
    map.cell_size_m = in.cell_size_m;
    const double width = net.xs().back(), height = net.ys().back();
    map.nx = std::max(1, static_cast<int>(std::ceil(width / in.cell_size_m - 1e-9)));
    map.ny = std::max(1, static_cast<int>(std::ceil(height / in.cell_size_m - 1e-9)));
    map.cells.resize(static_cast<std::size_t>(map.nx * map.ny));

    std::vector<int> counts(map.cells.size(), 0);
    for (const auto &v : in.vehicles)
    {
      const int cx = std::clamp(static_cast<int>(std::floor(v.position.x / in.cell_size_m)), 0, map.nx - 1);
      const int cy = std::clamp(static_cast<int>(std::floor(v.position.y / in.cell_size_m)), 0, map.ny - 1);
      ++counts[static_cast<std::size_t>(cy * map.nx + cx)];
    }

    std::vector<double> speed_sum(map.cells.size(), 0.0);
    std::vector<int> speed_n(map.cells.size(), 0);
    const Eigen::Index last = traffic_estimate.cols() - 1;
    if (last >= 0 && static_cast<std::size_t>(traffic_estimate.rows()) == net.size())
      for (const auto &s : net.segments())
      {
        const Point mid = net.point_on(s.id, s.length() / 2.0);
        const int cx = std::clamp(static_cast<int>(std::floor(mid.x / in.cell_size_m)), 0, map.nx - 1);
        const int cy = std::clamp(static_cast<int>(std::floor(mid.y / in.cell_size_m)), 0, map.ny - 1);
        speed_sum[static_cast<std::size_t>(cy * map.nx + cx)] += traffic_estimate(s.id, last);
        ++speed_n[static_cast<std::size_t>(cy * map.nx + cx)];
      }

    for (int cy = 0; cy < map.ny; ++cy)
      for (int cx = 0; cx < map.nx; ++cx)
      {
        const std::size_t k = static_cast<std::size_t>(cy * map.nx + cx);
        RecommendationCell &cell = map.cells[k];
        const double x0 = cx * in.cell_size_m, x1 = std::min(width, (cx + 1) * in.cell_size_m);
        const double y0 = cy * in.cell_size_m, y1 = std::min(height, (cy + 1) * in.cell_size_m);
        cell.cell_x = cx;
        cell.cell_y = cy;
        cell.centre = {(x0 + x1) / 2.0, (y0 + y1) / 2.0};
        const double street = net.street_length_in(x0, x1, y0, y1);
        cell.density = street > 0 ? counts[k] / street : 0.0;
        cell.mean_speed_kmh = speed_n[k] > 0 ? speed_sum[k] / speed_n[k] : std::nan("");
        cell.rsu_coverage = std::any_of(in.rsu_positions.begin(), in.rsu_positions.end(), [&](Point r) {
          return box_distance(r, x0, x1, y0, y1) <= in.rsu_radius_m;
        });
        const CellState state{cell.density, cell.rsu_coverage, 0.0};
        for (int s = 0; s < kServiceCount; ++s)
        {
          cell.index[s] = recommend_cell(state, static_cast<Service>(s));
          cell.best[s] = cell.index[s][1] > cell.index[s][0] ? NetworkOption::VANET : NetworkOption::Cellular;
        }
      }
    return map;
  }

  void write_recommendation_csv(std::ostream &out, const RecommendationMap &map, std::span<const Service> services)
  {
    out << "cell_x,cell_y,service,network,index,argmax\n";
    for (const auto &cell : map.cells)
      for (Service s : services)
        for (int n = 0; n < kNetworkCount; ++n)
        {
          const auto si = static_cast<std::size_t>(s);
          out << cell.cell_x << ',' << cell.cell_y << ',' << to_string(s) << ','
              << to_string(static_cast<NetworkOption>(n)) << ',' << csv::num(cell.index[si][static_cast<std::size_t>(n)])
              << ',' << to_string(cell.best[si]) << '\n';
        }
  }

} // namespace trasonet
