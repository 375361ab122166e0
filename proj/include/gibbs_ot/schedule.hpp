#pragma once

#include <cstddef>
#include <string>

namespace gibbs_ot {

/// T0 * (1 / l^4)^(n / l) / N: the geometric cooling used for the 1-D toy
/// and Coulomb experiments. n is the sweep index, l the sweep budget and N the
/// grid size.
double geometric_temperature(double T0, std::size_t l, std::size_t N, std::size_t n);

/// Per-epoch factor 1 - sqrt(1 / (m + m_bar)) used by the NMF trainer.
double epoch_decay_factor(double m, double m_bar);

/// Emits one strictly positive temperature per sweep.
///
/// `adaptive` tracks eta times the critical temperature of the current chain
/// state; the caller supplies that value through next(critical). The emitted
/// sequence never increases.
class TemperatureSchedule {
 public:
  enum class Kind { geometric, adaptive, constant, epoch_decay };

  static TemperatureSchedule geometric(double T0, std::size_t l, std::size_t N);
  static TemperatureSchedule adaptive(double eta, double initial = 0.0);
  static TemperatureSchedule constant(double T);
  static TemperatureSchedule epoch_decay(double T0, double factor);

  Kind kind() const { return kind_; }
  bool needs_critical_temperature() const { return kind_ == Kind::adaptive; }

  /// Temperature of the next sweep (non-adaptive kinds).
  double next();
  /// Temperature of the next sweep given the chain's current critical
  /// temperature. Non-adaptive kinds ignore the argument.
  double next(double critical_temperature);

  std::size_t index() const { return index_; }
  double current() const { return current_; }

  double T0() const { return T0_; }
  std::size_t budget() const { return l_; }
  std::size_t grid() const { return N_; }
  double eta() const { return eta_; }
  double factor() const { return factor_; }

  /// Restores the position of a schedule that was serialized mid-run.
  void restore(std::size_t index, double current) {
    index_ = index;
    current_ = current;
  }

  std::string describe() const;

  bool operator==(const TemperatureSchedule&) const = default;

 private:
  Kind kind_ = Kind::constant;
  double T0_ = 0.0;
  std::size_t l_ = 0;
  std::size_t N_ = 1;
  double eta_ = 0.5;
  double factor_ = 1.0;
  std::size_t index_ = 0;  // sweeps emitted so far
  double current_ = 0.0;   // last emitted temperature (0 before the first)
};

const char* to_string(TemperatureSchedule::Kind kind);

}  // namespace gibbs_ot
