/**
 * TrasoNET simulator.
 *
 * Distributed automatic access engine. Each vehicle runs one engine that
 * predicts the achievable QoS of an access option from a 16-rule fuzzy
 * rulebase over <Speed, Application, Option, Recommendation>, keeps a local
 * knowledge base of achieved QoS, adapts its trust in the recommender, and
 * hands over only when the predicted improvement persists.
 */
#ifndef TRASONET_ACCESS_HPP
#define TRASONET_ACCESS_HPP

#include "trasonet/config.hpp"
#include "trasonet/types.hpp"

#include <array>
#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace trasonet
{

  inline constexpr double kSpeedRangeKmh = 80.0;

  enum class SpeedLevel
  {
    Low = 0,
    High = 1
  };

  struct OutputLevels
  {
    double high = 0.9;
    double medium = 0.6;
    double low = 0.3;
  };

  struct FuzzyInputs
  {
    double speed_kmh = 0.0;
    Service application = Service::Voice;
    NetworkOption current_option = NetworkOption::Cellular;
    NetworkOption recommendation = NetworkOption::Cellular;
  };

  struct FuzzyRule
  {
    SpeedLevel speed = SpeedLevel::Low;
    Service application = Service::Voice;
    NetworkOption option = NetworkOption::Cellular;
    NetworkOption recommendation = NetworkOption::Cellular;
    double output_level = 0.5;
  };

  /** Complementary memberships over [0, 80] km/h: (1 - s/80, s/80). Input is clamped. */
  std::pair<double, double> fuzzify_speed(double speed_kmh);

  /** Exactly one rule per premise combination, indexed S, A, O, R with R varying fastest. */
  class Rulebase
  {
  public:
    /** Throws ValidationError unless the 16 premises are each covered exactly once. */
    explicit Rulebase(std::vector<FuzzyRule> rules);

    static std::size_t index_of(SpeedLevel s, Service a, NetworkOption o, NetworkOption r)
    {
      return static_cast<std::size_t>(s) * 8 + static_cast<std::size_t>(a) * 4 + static_cast<std::size_t>(o) * 2 +
             static_cast<std::size_t>(r);
    }

    const FuzzyRule &rule(SpeedLevel s, Service a, NetworkOption o, NetworkOption r) const
    {
      return rules_[index_of(s, a, o, r)];
    }
    /** Rule number n in 1..16. */
    const FuzzyRule &rule(int n) const { return rules_.at(static_cast<std::size_t>(n - 1)); }
    std::span<const FuzzyRule> rules() const { return rules_; }

  private:
    std::array<FuzzyRule, 16> rules_{};
  };

  /** Shipped table; see data/rulebase.json for the same rules as a file. */
  Rulebase default_rulebase(const OutputLevels &levels = {});

  /** JSON array of 16 objects {speed, app, option, rec, level}. Throws ValidationError. */
  Rulebase rulebase_from_json(const nlohmann::json &j);
  Rulebase load_rulebase(const std::filesystem::path &path);
  nlohmann::json rulebase_to_json(const Rulebase &rb);

  struct KnowledgeRecord
  {
    double speed_kmh = 0.0;
    Service application = Service::Voice;
    NetworkOption option = NetworkOption::Cellular;
    double achieved_qos = 0.0;
    NetworkOption recommendation = NetworkOption::Cellular;
    int cycle_index = 0;
  };

  /** Q<S,A,O,Q|R> history: a ring buffer of `capacity` records per (A, O) pair. */
  class KnowledgeBase
  {
  public:
    static constexpr std::size_t kDefaultCapacity = 1000;

    explicit KnowledgeBase(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

    void add(const KnowledgeRecord &record);
    std::size_t size() const;
    std::size_t size(Service a, NetworkOption o) const { return slots_[slot(a, o)].size(); }
    const std::deque<KnowledgeRecord> &records(Service a, NetworkOption o) const { return slots_[slot(a, o)]; }

    /** Mean achieved QoS over records with this speed level, application and option. */
    std::optional<double> mean_qos(SpeedLevel s, Service a, NetworkOption o) const;

  private:
    static std::size_t slot(Service a, NetworkOption o)
    {
      return static_cast<std::size_t>(a) * 2 + static_cast<std::size_t>(o);
    }
    std::size_t capacity_;
    std::array<std::deque<KnowledgeRecord>, 4> slots_;
  };

  /** Returns kb with the record appended (oldest of its (A, O) pair evicted at capacity). */
  KnowledgeBase update_knowledge(KnowledgeBase kb, const KnowledgeRecord &record);

  SpeedLevel speed_level(double speed_kmh);

  /**
   * Weighted-average inference. Speed is fuzzified, A and O are singletons,
   * and R is graded by trust: rules whose R premise matches the
   * recommendation get membership `trust`, the others `1 - trust`. Firing
   * strength is the product of memberships. When nothing fires, falls back to
   * the knowledge-base mean, else 0.5.
   */
  double infer(const FuzzyInputs &inputs, const Rulebase &rulebase, double trust,
               const KnowledgeBase *kb = nullptr);

  /** Achievable QoS on the other network: infer() with current_option swapped. */
  double evaluate_candidate(const FuzzyInputs &inputs, const Rulebase &rulebase, double trust,
                            const KnowledgeBase *kb = nullptr);

  /**
   * True iff level_l - level_c > qos_improvement_threshold and that has held
   * for consecutive_cycles_above >= dwell_threshold_cycles cycles (the
   * current one included).
   */
  bool decide_handover(double level_l, double level_c, const HandoverPolicy &policy, int consecutive_cycles_above);

  /** trust <- (1 - a) trust + a (1 - |predicted - achieved|), clamped to [0, 1]. */
  double adapt_trust(const HandoverPolicy &policy, double predicted_qos, double achieved_qos);

  /** Per-vehicle engine state. Engines share nothing but the immutable rulebase. */
  class AccessEngine
  {
  public:
    AccessEngine(std::shared_ptr<const Rulebase> rulebase, HandoverPolicy policy);

    /** Predicted QoS of staying on inputs.current_option. */
    double predict_current(const FuzzyInputs &inputs) const;
    /** Predicted QoS of switching (Level_l). */
    double predict_candidate(const FuzzyInputs &inputs) const;

    /**
     * Feed one cycle: level_c is the QoS achieved on the current option.
     * Updates the improvement counter and returns true when a handover fires
     * (the counter is then reset).
     */
    bool observe(const FuzzyInputs &inputs, double level_c);

    /** Record achieved QoS and adapt trust against the prediction made for it. */
    void learn(const FuzzyInputs &inputs, double predicted_qos, double achieved_qos, int cycle_index);

    void reset_counter() { consecutive_above_ = 0; }

    const HandoverPolicy &policy() const { return policy_; }
    const KnowledgeBase &knowledge() const { return kb_; }
    int consecutive_above() const { return consecutive_above_; }

    nlohmann::json dump() const;

  private:
    std::shared_ptr<const Rulebase> rulebase_;
    HandoverPolicy policy_;
    KnowledgeBase kb_;
    int consecutive_above_ = 0;
  };

} // namespace trasonet

#endif // TRASONET_ACCESS_HPP
