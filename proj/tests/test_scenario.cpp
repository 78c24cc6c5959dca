#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "trasonet/scenario.hpp"

#include <cmath>
#include <set>

using namespace trasonet;

namespace
{
  ScenarioConfig small_grid(int nv, int nh, double w, double h)
  {
    ScenarioConfig c = default_scenario();
    c.map_width_m = w;
    c.map_height_m = h;
    c.n_vertical_streets = nv;
    c.n_horizontal_streets = nh;
    c.social_spots = {{0.0, 0.0}};
    c.n_vehicles = 10;
    c.n_probe_vehicles = 2;
    c.n_floating_cars = 1;
    return c;
  }

  /** Least-squares slope of y on x. */
  double slope(const std::vector<double> &x, const std::vector<double> &y)
  {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
      mx += x[i];
      my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
  }
} // namespace

TEST_CASE("segment count follows the block formula")
{
  const auto net = build_road_network(default_scenario());
  CHECK(net.size() == 760u);
  CHECK(build_road_network(small_grid(2, 2, 100, 100)).size() == 4u);
  CHECK(build_road_network(small_grid(10, 11, 4500, 5000)).size() == 199u);
}

TEST_CASE("segment ids are dense, unique and stable")
{
  const auto c = small_grid(4, 6, 3000, 5000);
  const auto a = build_road_network(c);
  const auto b = build_road_network(c);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    CHECK(a.segments()[i].id == static_cast<SegmentId>(i));
    CHECK(a.segments()[i].start_m == b.segments()[i].start_m);
    CHECK(a.segments()[i].axis == b.segments()[i].axis);
    CHECK(a.segments()[i].length() > 0);
  }
}

TEST_CASE("invalid configs are rejected")
{
  auto c = small_grid(1, 5, 100, 100);
  CHECK_THROWS_AS(build_road_network(c), ConfigError);
  c = small_grid(3, 3, -1, 100);
  CHECK_THROWS_AS(build_road_network(c), ConfigError);
  c = small_grid(3, 3, 100, 100);
  c.gamma = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_grid(3, 3, 100, 100);
  c.social_spots = {{200, 50}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_grid(3, 3, 100, 100);
  c.n_probe_vehicles = 0;
  c.n_floating_cars = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_grid(3, 3, 100, 100);
  c.service_mix = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("neighbours share an intersection")
{
  const auto net = build_road_network(small_grid(5, 5, 400, 400));
  for (const auto &s : net.segments())
    for (SegmentId n : net.neighbours(s.id))
    {
      const Node a = net.start_node(s.id), b = net.end_node(s.id);
      const Node c = net.start_node(n), d = net.end_node(n);
      CHECK((a == c || a == d || b == c || b == d));
    }
}

TEST_CASE("tier probabilities follow the power law")
{
  const SocialSpot spot{{0, 0}, 1000.0, 10};
  const auto p = tier_probabilities(spot, 2.0);
  double total = 0;
  for (double x : p)
    total += x;
  CHECK(total == doctest::Approx(1.0));
  // Density (probability / area) of tier k is proportional to mid^-2.
  auto density = [&](int k) {
    const double w = spot.tier_width();
    return p[k] / (M_PI * (std::pow((k + 1) * w, 2) - std::pow(k * w, 2)));
  };
  const double mid1 = 150.0, mid3 = 350.0;
  CHECK(density(1) / density(3) == doctest::Approx(std::pow(mid3 / mid1, 2.0)));
}

TEST_CASE("areal density ratio between tiers is the power of their mid-radius ratio")
{
  // Tier mids are odd multiples of half a width, so compare d and 3d: ratio 3^gamma.
  const SocialSpot spot{{0, 0}, 400.0, 4};
  for (double gamma : {1.0, 2.0, 3.0})
  {
    const auto p = tier_probabilities(spot, gamma);
    auto density = [&](int k) { return p[k] / (std::pow((k + 1) * 100.0, 2) - std::pow(k * 100.0, 2)); };
    CHECK(density(0) / density(1) == doctest::Approx(std::pow(3.0, gamma)));
  }
}

TEST_CASE("placement radial density exponent is -2 within 0.3")
{
  ScenarioConfig c = default_scenario();
  c.rng_seed = 11;
  const auto net = build_road_network(c);
  const auto vehicles = place_vehicles(c, net);
  REQUIRE(vehicles.size() == 20000u);
  const auto spots = social_spots(c);
  const double w = spots[0].tier_width();
  std::vector<double> counts(static_cast<std::size_t>(c.n_tiers), 0.0);
  for (const auto &v : vehicles)
  {
    const double r = distance(v.position, spots[static_cast<std::size_t>(v.home_spot)].position);
    const int k = std::min(c.n_tiers - 1, static_cast<int>(r / w));
    counts[static_cast<std::size_t>(k)] += 1;
  }
  std::vector<double> lx, ly;
  for (int k = 0; k < c.n_tiers; ++k)
    if (counts[k] > 0)
    {
      const double area = M_PI * (std::pow((k + 1) * w, 2) - std::pow(k * w, 2));
      lx.push_back(std::log((k + 0.5) * w));
      ly.push_back(std::log(counts[k] / area));
    }
  const double s = slope(lx, ly);
  CHECK(s == doctest::Approx(-2.0).epsilon(0.15));
  CHECK(std::abs(s + 2.0) <= 0.3);
}

TEST_CASE("placement: roles, containment, determinism")
{
  ScenarioConfig c = desk_scenario();
  const auto net = build_road_network(c);
  const auto a = place_vehicles(c, net);
  const auto b = place_vehicles(c, net);
  REQUIRE(a.size() == 2000u);
  const auto spots = social_spots(c);
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    const auto &v = a[i];
    CHECK(v.vehicle_id == static_cast<VehicleId>(i));
    const auto expected = i < 200 ? VehicleRole::ProbeVehicle : i < 226 ? VehicleRole::FloatingCar : VehicleRole::Regular;
    CHECK(v.role == expected);
    CHECK(distance(v.position, spots[v.home_spot].position) <= c.mobility_radius_m + 1e-6);
    CHECK(net.distance_to(v.segment, v.position) < 1e-9);
    CHECK(v.speed_kmh >= 0);
    CHECK(v.speed_kmh <= c.speed_limit_kmh);
    CHECK(v.position == b[i].position);
  }
}

TEST_CASE("zero vehicles place nothing")
{
  ScenarioConfig c = small_grid(3, 3, 100, 100);
  c.n_vehicles = 0;
  c.n_probe_vehicles = 0;
  c.n_floating_cars = 0;
  CHECK(place_vehicles(c, build_road_network(c)).empty());
}

TEST_CASE("kinematics: 36 km/h for 30 s moves 300 m along the heading")
{
  ScenarioConfig c = small_grid(2, 2, 2000, 2000);
  c.mobility_radius_m = 3000;
  const auto net = build_road_network(c);
  const auto spots = social_spots(c);
  VehicleState v;
  v.segment = net.vertical_id(0, 0);
  v.offset_m = 1000.0;
  v.direction = 1;
  v.speed_kmh = 36.0;
  sync_geometry(v, net);
  std::vector<VehicleState> vs{v};
  Rng rng(1);
  step_mobility(vs, {net, spots, 80.0}, 30.0, rng);
  CHECK(vs[0].position.x == doctest::Approx(0.0));
  CHECK(vs[0].position.y == doctest::Approx(1300.0));
  CHECK(vs[0].heading.y == doctest::Approx(1.0));
}

TEST_CASE("a vehicle reaching its region boundary reverses")
{
  ScenarioConfig c = small_grid(2, 2, 2000, 2000);
  c.mobility_radius_m = 1500;
  const auto net = build_road_network(c);
  const auto spots = social_spots(c);
  VehicleState v;
  v.segment = net.vertical_id(0, 0);
  v.offset_m = 1400.0;
  v.direction = 1;
  v.speed_kmh = 36.0;
  sync_geometry(v, net);
  std::vector<VehicleState> vs{v};
  Rng rng(1);
  step_mobility(vs, {net, spots, 80.0}, 30.0, rng);
  CHECK(vs[0].direction == -1);
  CHECK(vs[0].position.y == doctest::Approx(1300.0).epsilon(1e-6));
  CHECK(distance(vs[0].position, spots[0].position) <= 1500.0);
}

TEST_CASE("mobility keeps regular and probe vehicles in their regions, deterministically")
{
  ScenarioConfig c = desk_scenario();
  const auto net = build_road_network(c);
  const auto spots = social_spots(c);
  auto a = place_vehicles(c, net);
  auto b = a;
  Rng ra = Rng::stream(c.rng_seed, "mobility"), rb = Rng::stream(c.rng_seed, "mobility");
  for (int t = 0; t < 40; ++t)
  {
    step_mobility(a, {net, spots, c.speed_limit_kmh}, c.duty_cycle_s, ra);
    step_mobility(b, {net, spots, c.speed_limit_kmh}, c.duty_cycle_s, rb);
    for (std::size_t i = 0; i < a.size(); ++i)
    {
      REQUIRE(distance(a[i].position, spots[a[i].home_spot].position) <= c.mobility_radius_m + 1e-6);
      REQUIRE(a[i].speed_kmh >= 0);
      REQUIRE(a[i].speed_kmh <= c.speed_limit_kmh);
      REQUIRE(a[i].position == b[i].position);
    }
  }
}

TEST_CASE("floating cars follow their plan")
{
  ScenarioConfig c = small_grid(3, 3, 1000, 1000);
  c.mobility_radius_m = 2000;
  const auto net = build_road_network(c);
  const auto spots = social_spots(c);
  VehicleState v;
  v.vehicle_id = 7;
  v.role = VehicleRole::FloatingCar;
  v.segment = 0;
  sync_geometry(v, net);
  FcRoutePlan plan;
  plan.start_cycle = 5;
  plan.routes.push_back({7, {3, 4}, {net.point_on(3, 250), net.point_on(4, 250)}});
  std::vector<VehicleState> vs{v};
  Rng rng(3);
  step_mobility(vs, {net, spots, 80.0}, 30.0, rng, &plan, 6);
  CHECK(vs[0].segment == 4);
  CHECK(vs[0].position == net.point_on(4, 250));
}

TEST_CASE("config JSON round-trips")
{
  const auto c = desk_scenario();
  const auto back = parse_config(nlohmann::json(c).dump());
  CHECK(nlohmann::json(back) == nlohmann::json(c));
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"gamma": -1})"), ConfigError);
  const auto partial = parse_config(R"({"n_vehicles": 5000, "social_spots": [{"x": 10, "y": 20}]})");
  CHECK(partial.n_vehicles == 5000);
  CHECK(partial.social_spots.at(0) == Point{10, 20});
}
