#include "trasonet/access.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

using nlohmann::json;

namespace trasonet
{

  std::pair<double, double> fuzzify_speed(double speed_kmh)
  {
    const double s = std::clamp(speed_kmh, 0.0, kSpeedRangeKmh) / kSpeedRangeKmh;
    return {1.0 - s, s};
  }

  SpeedLevel speed_level(double speed_kmh)
  {
    const auto [low, high] = fuzzify_speed(speed_kmh);
    return low >= high ? SpeedLevel::Low : SpeedLevel::High;
  }

  Rulebase::Rulebase(std::vector<FuzzyRule> rules)
  {
    if (rules.size() != rules_.size())
      throw ValidationError("rulebase must contain exactly 16 rules, got " + std::to_string(rules.size()));
    std::array<bool, 16> seen{};
    for (const auto &r : rules)
    {
      const std::size_t k = index_of(r.speed, r.application, r.option, r.recommendation);
      if (seen[k])
        throw ValidationError("rulebase has two rules for the same premise");
      if (!(r.output_level >= 0.0 && r.output_level <= 1.0))
        throw ValidationError("rule output level must lie in [0,1]");
      seen[k] = true;
      rules_[k] = r;
    }
  }

  Rulebase default_rulebase(const OutputLevels &levels)
  {
    const double h = levels.high, m = levels.medium, l = levels.low;
    using S = SpeedLevel;
    using A = Service;
    using O = NetworkOption;
    // Cellular holds up at speed and for voice; VANET suffers at high speed;
    // video strains cellular.
    return Rulebase({
        {S::Low, A::Voice, O::Cellular, O::Cellular, h},
        {S::Low, A::Voice, O::Cellular, O::VANET, h},
        {S::Low, A::Voice, O::VANET, O::Cellular, m},
        {S::Low, A::Voice, O::VANET, O::VANET, h},
        {S::High, A::Voice, O::Cellular, O::Cellular, h},
        {S::High, A::Voice, O::Cellular, O::VANET, m},
        {S::High, A::Voice, O::VANET, O::Cellular, l},
        {S::High, A::Voice, O::VANET, O::VANET, m},
        {S::Low, A::Video, O::Cellular, O::Cellular, m},
        {S::Low, A::Video, O::Cellular, O::VANET, l},
        {S::Low, A::Video, O::VANET, O::Cellular, m},
        {S::Low, A::Video, O::VANET, O::VANET, h},
        {S::High, A::Video, O::Cellular, O::Cellular, m},
        {S::High, A::Video, O::Cellular, O::VANET, l},
        {S::High, A::Video, O::VANET, O::Cellular, l},
        {S::High, A::Video, O::VANET, O::VANET, l},
    });
  }

  namespace
  {
    SpeedLevel parse_speed_level(const std::string &s)
    {
      if (s == "Low" || s == "low")
        return SpeedLevel::Low;
      if (s == "High" || s == "high")
        return SpeedLevel::High;
      throw ValidationError("unknown speed level: " + s);
    }

    double parse_level(const json &j)
    {
      if (j.is_number())
        return j.get<double>();
      const OutputLevels defaults;
      const auto s = j.get<std::string>();
      if (s == "level_h" || s == "h" || s == "high")
        return defaults.high;
      if (s == "level_m" || s == "m" || s == "medium")
        return defaults.medium;
      if (s == "level_l" || s == "l" || s == "low")
        return defaults.low;
      throw ValidationError("unknown output level: " + s);
    }
  } // namespace

  Rulebase rulebase_from_json(const json &j)
  {
    if (!j.is_array())
      throw ValidationError("rulebase must be a JSON array");
    std::vector<FuzzyRule> rules;
    try
    {
      for (const auto &r : j)
        rules.push_back({parse_speed_level(r.at("speed").get<std::string>()),
                         parse_service(r.at("app").get<std::string>()),
                         parse_network(r.at("option").get<std::string>()),
                         parse_network(r.at("rec").get<std::string>()), parse_level(r.at("level"))});
    }
    catch (const json::exception &e)
    {
      throw ValidationError(std::string("rulebase: ") + e.what());
    }
    return Rulebase(std::move(rules));
  }

  Rulebase load_rulebase(const std::filesystem::path &path)
  {
    std::ifstream in(path);
    if (!in)
      throw ValidationError("cannot open rulebase: " + path.string());
    try
    {
      return rulebase_from_json(json::parse(in));
    }
    catch (const json::parse_error &e)
    {
      throw ValidationError(std::string("rulebase: ") + e.what());
    }
  }

  json rulebase_to_json(const Rulebase &rb)
  {
    json a = json::array();
    for (const auto &r : rb.rules())
      a.push_back({{"speed", r.speed == SpeedLevel::Low ? "Low" : "High"},
                   {"app", to_string(r.application)},
                   {"option", to_string(r.option)},
                   {"rec", to_string(r.recommendation)},
                   {"level", r.output_level}});
    return a;
  }

  void KnowledgeBase::add(const KnowledgeRecord &record)
  {
    if (!(record.achieved_qos >= 0.0 && record.achieved_qos <= 1.0))
      throw ValidationError("knowledge record QoS must lie in [0,1]");
    auto &q = slots_[slot(record.application, record.option)];
    if (capacity_ == 0)
      return;
    if (q.size() == capacity_)
      q.pop_front();
    q.push_back(record);
  }

  std::size_t KnowledgeBase::size() const
  {
    return std::accumulate(slots_.begin(), slots_.end(), std::size_t{0},
                           [](std::size_t n, const auto &q) { return n + q.size(); });
  }

  std::optional<double> KnowledgeBase::mean_qos(SpeedLevel s, Service a, NetworkOption o) const
  {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &r : slots_[slot(a, o)])
      if (speed_level(r.speed_kmh) == s)
      {
        sum += r.achieved_qos;
        ++n;
      }
    if (n == 0)
      return std::nullopt;
    return sum / static_cast<double>(n);
  }

  KnowledgeBase update_knowledge(KnowledgeBase kb, const KnowledgeRecord &record)
  {
    kb.add(record);
    return kb;
  }

  double infer(const FuzzyInputs &inputs, const Rulebase &rulebase, double trust, const KnowledgeBase *kb)
  {
    trust = std::clamp(trust, 0.0, 1.0);
    const auto [mu_low, mu_high] = fuzzify_speed(inputs.speed_kmh);
    double num = 0.0, den = 0.0;
    for (const auto &rule : rulebase.rules())
    {
      if (rule.application != inputs.application || rule.option != inputs.current_option)
        continue;
      const double mu_s = rule.speed == SpeedLevel::Low ? mu_low : mu_high;
      const double mu_r = rule.recommendation == inputs.recommendation ? trust : 1.0 - trust;
      const double strength = mu_s * mu_r;
      num += strength * rule.output_level;
      den += strength;
    }
    if (den > 0.0)
      return std::clamp(num / den, 0.0, 1.0);
    if (kb)
      if (auto m = kb->mean_qos(speed_level(inputs.speed_kmh), inputs.application, inputs.current_option))
        return *m;
    return 0.5;
  }

  double evaluate_candidate(const FuzzyInputs &inputs, const Rulebase &rulebase, double trust,
                            const KnowledgeBase *kb)
  {
    FuzzyInputs swapped = inputs;
    swapped.current_option = other(inputs.current_option);
    return infer(swapped, rulebase, trust, kb);
  }

  bool decide_handover(double level_l, double level_c, const HandoverPolicy &policy, int consecutive_cycles_above)
  {
    return (level_l - level_c) > policy.qos_improvement_threshold &&
           consecutive_cycles_above >= policy.dwell_threshold_cycles;
  }

  double adapt_trust(const HandoverPolicy &policy, double predicted_qos, double achieved_qos)
  {
    const double a = policy.trust_smoothing;
    const double t = (1.0 - a) * policy.trust + a * (1.0 - std::abs(predicted_qos - achieved_qos));
    return std::clamp(t, 0.0, 1.0);
  }

  AccessEngine::AccessEngine(std::shared_ptr<const Rulebase> rulebase, HandoverPolicy policy)
      : rulebase_(std::move(rulebase)), policy_(policy)
  {
    if (!rulebase_)
      throw ValidationError("access engine needs a rulebase");
    policy_.validate();
  }

  double AccessEngine::predict_current(const FuzzyInputs &inputs) const
  {
    return infer(inputs, *rulebase_, policy_.trust, &kb_);
  }

  double AccessEngine::predict_candidate(const FuzzyInputs &inputs) const
  {
    return evaluate_candidate(inputs, *rulebase_, policy_.trust, &kb_);
  }

  bool AccessEngine::observe(const FuzzyInputs &inputs, double level_c)
  {
    const double level_l = predict_candidate(inputs);
    if (level_l - level_c > policy_.qos_improvement_threshold)
      ++consecutive_above_;
    else
      consecutive_above_ = 0;
    const bool fire = decide_handover(level_l, level_c, policy_, consecutive_above_);
    if (fire)
      consecutive_above_ = 0;
    return fire;
  }

  void AccessEngine::learn(const FuzzyInputs &inputs, double predicted_qos, double achieved_qos, int cycle_index)
  {
    kb_.add({inputs.speed_kmh, inputs.application, inputs.current_option, achieved_qos, inputs.recommendation,
             cycle_index});
    policy_.trust = adapt_trust(policy_, predicted_qos, achieved_qos);
  }

  json AccessEngine::dump() const
  {
    json kb = json::object();
    for (Service a : {Service::Voice, Service::Video})
      for (NetworkOption o : {NetworkOption::Cellular, NetworkOption::VANET})
      {
        const std::string key = std::string(to_string(a)) + "/" + std::string(to_string(o));
        kb[key] = {{"records", kb_.size(a, o)},
                   {"mean_low", kb_.mean_qos(SpeedLevel::Low, a, o).value_or(-1.0)},
                   {"mean_high", kb_.mean_qos(SpeedLevel::High, a, o).value_or(-1.0)}};
      }
    return {{"trust", policy_.trust}, {"consecutive_above", consecutive_above_}, {"knowledge", kb}};
  }

} // namespace trasonet
