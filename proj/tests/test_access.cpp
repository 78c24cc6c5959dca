#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "trasonet/access.hpp"
#include "trasonet/rng.hpp"

#include <algorithm>

using namespace trasonet;

namespace
{
  const auto kRules = std::make_shared<const Rulebase>(default_rulebase());

  FuzzyInputs inputs(double speed, Service a, NetworkOption o, NetworkOption r)
  {
    return {speed, a, o, r};
  }
} // namespace

TEST_CASE("speed fuzzification")
{
  CHECK(fuzzify_speed(0) == std::pair{1.0, 0.0});
  CHECK(fuzzify_speed(80) == std::pair{0.0, 1.0});
  CHECK(fuzzify_speed(20).second == doctest::Approx(0.25));
  CHECK(fuzzify_speed(-5) == std::pair{1.0, 0.0});
  CHECK(fuzzify_speed(500) == std::pair{0.0, 1.0});
  CHECK(speed_level(40) == SpeedLevel::Low);
  CHECK(speed_level(41) == SpeedLevel::High);
}

TEST_CASE("rulebase ordering and the first and last rules")
{
  const auto &rb = *kRules;
  const auto &r1 = rb.rule(1);
  CHECK(r1.speed == SpeedLevel::Low);
  CHECK(r1.application == Service::Voice);
  CHECK(r1.option == NetworkOption::Cellular);
  CHECK(r1.recommendation == NetworkOption::Cellular);
  CHECK(r1.output_level == 0.9);
  const auto &r16 = rb.rule(16);
  CHECK(r16.speed == SpeedLevel::High);
  CHECK(r16.application == Service::Video);
  CHECK(r16.option == NetworkOption::VANET);
  CHECK(r16.recommendation == NetworkOption::VANET);
  CHECK(r16.output_level == 0.3);
}

TEST_CASE("a single fully firing rule yields its output level exactly")
{
  CHECK(infer(inputs(0, Service::Voice, NetworkOption::Cellular, NetworkOption::Cellular), *kRules, 1.0) == 0.9);
  CHECK(infer(inputs(80, Service::Video, NetworkOption::VANET, NetworkOption::VANET), *kRules, 1.0) == 0.3);
  for (int n = 1; n <= 16; ++n)
  {
    const auto &r = kRules->rule(n);
    const double speed = r.speed == SpeedLevel::Low ? 0.0 : 80.0;
    CHECK(infer(inputs(speed, r.application, r.option, r.recommendation), *kRules, 1.0) == r.output_level);
  }
}

TEST_CASE("inference stays in [0, 1] and moves monotonically with speed")
{
  Rng rng(4);
  for (int k = 0; k < 2000; ++k)
  {
    const auto in = inputs(rng.uniform(-10, 100), static_cast<Service>(rng.index(2)),
                           static_cast<NetworkOption>(rng.index(2)), static_cast<NetworkOption>(rng.index(2)));
    const double q = infer(in, *kRules, rng.uniform());
    REQUIRE(q >= 0.0);
    REQUIRE(q <= 1.0);
  }
  // Video on cellular, recommended cellular: m at every speed.
  for (double sp = 0; sp <= 80; sp += 5)
    CHECK(infer(inputs(sp, Service::Video, NetworkOption::Cellular, NetworkOption::Cellular), *kRules, 1.0) ==
          doctest::Approx(0.6));
  // Voice on VANET, recommended VANET: h at rest falling to m.
  double prev = 1.0;
  for (double sp = 0; sp <= 80; sp += 5)
  {
    const double q = infer(inputs(sp, Service::Voice, NetworkOption::VANET, NetworkOption::VANET), *kRules, 1.0);
    CHECK(q <= prev + 1e-12);
    CHECK(q >= 0.6 - 1e-12);
    prev = q;
  }
  CHECK(prev == doctest::Approx(0.6));
}

TEST_CASE("raising one rule's level never lowers the output where it fires")
{
  Rng rng(8);
  for (int k = 0; k < 500; ++k)
  {
    auto j = rulebase_to_json(*kRules);
    const auto in = inputs(rng.uniform(0, 80), static_cast<Service>(rng.index(2)),
                           static_cast<NetworkOption>(rng.index(2)), static_cast<NetworkOption>(rng.index(2)));
    const double trust = rng.uniform();
    const double before = infer(in, rulebase_from_json(j), trust);
    const std::size_t n = rng.index(16);
    j[n]["level"] = std::min(1.0, j[n]["level"].get<double>() + rng.uniform(0, 0.5));
    REQUIRE(infer(in, rulebase_from_json(j), trust) >= before - 1e-12);
  }
}

TEST_CASE("trust grades the recommendation premise")
{
  const auto in = inputs(0, Service::Video, NetworkOption::Cellular, NetworkOption::VANET);
  // At trust 0 the rule with the other recommendation fires alone.
  const double matched = kRules->rule(SpeedLevel::Low, Service::Video, NetworkOption::Cellular, NetworkOption::VANET)
                             .output_level;
  const double other = kRules->rule(SpeedLevel::Low, Service::Video, NetworkOption::Cellular, NetworkOption::Cellular)
                           .output_level;
  CHECK(infer(in, *kRules, 1.0) == doctest::Approx(matched));
  CHECK(infer(in, *kRules, 0.0) == doctest::Approx(other));
  CHECK(infer(in, *kRules, 0.5) == doctest::Approx((matched + other) / 2));
}

TEST_CASE("candidate evaluation swaps the option")
{
  const auto in = inputs(10, Service::Video, NetworkOption::Cellular, NetworkOption::VANET);
  auto swapped = in;
  swapped.current_option = NetworkOption::VANET;
  CHECK(evaluate_candidate(in, *kRules, 0.8) == infer(swapped, *kRules, 0.8));
}

TEST_CASE("handover decision needs both the margin and the dwell")
{
  HandoverPolicy p;
  CHECK_FALSE(decide_handover(0.9, 0.5, p, 2));
  CHECK(decide_handover(0.9, 0.5, p, 3));
  CHECK_FALSE(decide_handover(0.6, 0.5, p, 10));
  CHECK_FALSE(decide_handover(0.8, 0.5, p, 1));
  p.qos_improvement_threshold = 0.25;
  CHECK_FALSE(decide_handover(0.75, 0.5, p, 10)); // strictly greater than the threshold
}

TEST_CASE("alternating improvement never triggers a handover")
{
  AccessEngine engine(kRules, HandoverPolicy{});
  const auto in = inputs(0, Service::Video, NetworkOption::Cellular, NetworkOption::VANET);
  const double level_l = engine.predict_candidate(in);
  for (int t = 0; t < 200; ++t)
  {
    const double level_c = t % 2 == 0 ? level_l - 0.5 : level_l;
    REQUIRE_FALSE(engine.observe(in, std::clamp(level_c, 0.0, 1.0)));
  }
}

TEST_CASE("sustained improvement fires after the dwell and resets the counter")
{
  AccessEngine engine(kRules, HandoverPolicy{});
  const auto in = inputs(0, Service::Video, NetworkOption::Cellular, NetworkOption::VANET);
  CHECK(engine.predict_candidate(in) > 0.15);
  CHECK_FALSE(engine.observe(in, 0.0));
  CHECK_FALSE(engine.observe(in, 0.0));
  CHECK(engine.observe(in, 0.0));
  CHECK(engine.consecutive_above() == 0);
}

TEST_CASE("trust adaptation")
{
  HandoverPolicy p;
  p.trust = 0.5;
  CHECK(adapt_trust(p, 0.7, 0.7) == doctest::Approx(0.6));
  CHECK(adapt_trust(p, 1.0, 0.0) == doctest::Approx(0.4));
  p.trust = 1.0;
  CHECK(adapt_trust(p, 0.3, 0.3) == 1.0);
  AccessEngine engine(kRules, p);
  const auto in = inputs(0, Service::Voice, NetworkOption::Cellular, NetworkOption::Cellular);
  engine.learn(in, 0.9, 0.1, 0);
  CHECK(engine.policy().trust < 1.0);
  CHECK(engine.knowledge().size() == 1u);
  CHECK(engine.dump()["trust"].get<double>() == doctest::Approx(engine.policy().trust));
}

TEST_CASE("knowledge base evicts the oldest record per pair")
{
  KnowledgeBase kb(3);
  for (int t = 0; t < 5; ++t)
    kb = update_knowledge(kb, {10, Service::Voice, NetworkOption::Cellular, 0.1 * t, NetworkOption::Cellular, t});
  kb.add({70, Service::Voice, NetworkOption::Cellular, 1.0, NetworkOption::Cellular, 9});
  kb.add({10, Service::Video, NetworkOption::VANET, 0.5, NetworkOption::VANET, 9});
  CHECK(kb.size(Service::Voice, NetworkOption::Cellular) == 3u);
  CHECK(kb.records(Service::Voice, NetworkOption::Cellular).front().cycle_index == 3);
  CHECK(kb.size() == 4u);
  CHECK(*kb.mean_qos(SpeedLevel::Low, Service::Voice, NetworkOption::Cellular) == doctest::Approx(0.35));
  CHECK(*kb.mean_qos(SpeedLevel::High, Service::Voice, NetworkOption::Cellular) == 1.0);
  CHECK_FALSE(kb.mean_qos(SpeedLevel::High, Service::Video, NetworkOption::Cellular).has_value());
  KnowledgeBase full;
  for (int t = 0; t <= 1000; ++t)
    full.add({10, Service::Video, NetworkOption::VANET, 0.5, NetworkOption::VANET, t});
  CHECK(full.size() == 1000u);
  CHECK(full.records(Service::Video, NetworkOption::VANET).front().cycle_index == 1);
  CHECK_THROWS_AS(kb.add({10, Service::Voice, NetworkOption::VANET, 1.5, NetworkOption::VANET, 0}), ValidationError);
}

TEST_CASE("rulebase JSON validation and the shipped file")
{
  const auto j = rulebase_to_json(*kRules);
  const auto back = rulebase_from_json(j);
  for (int n = 1; n <= 16; ++n)
    CHECK(back.rule(n).output_level == kRules->rule(n).output_level);

  const auto file = load_rulebase(TRASONET_SOURCE_DIR "/data/rulebase.json");
  CHECK(rulebase_to_json(file) == j);

  auto missing = j;
  missing.erase(missing.begin());
  CHECK_THROWS_AS(rulebase_from_json(missing), ValidationError);
  auto dup = j;
  dup[1] = dup[0];
  CHECK_THROWS_AS(rulebase_from_json(dup), ValidationError);
  auto out_of_range = j;
  out_of_range[0]["level"] = 1.5;
  CHECK_THROWS_AS(rulebase_from_json(out_of_range), ValidationError);
  auto named = j;
  named[0]["level"] = "low";
  CHECK(rulebase_from_json(named).rule(1).output_level == 0.3);
  CHECK_THROWS_AS(rulebase_from_json(nlohmann::json::object()), ValidationError);
}
