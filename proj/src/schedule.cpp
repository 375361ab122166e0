#include "gibbs_ot/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gibbs_ot {

double geometric_temperature(double T0, std::size_t l, std::size_t N, std::size_t n) {
  const double ld = static_cast<double>(l);
  return T0 * std::pow(1.0 / std::pow(ld, 4.0), static_cast<double>(n) / ld) /
         static_cast<double>(N);
}

double epoch_decay_factor(double m, double m_bar) {
  if (!(m + m_bar > 1.0)) throw std::invalid_argument("epoch_decay_factor: m + m_bar must exceed 1");
  return 1.0 - std::sqrt(1.0 / (m + m_bar));
}

TemperatureSchedule TemperatureSchedule::geometric(double T0, std::size_t l, std::size_t N) {
  if (!(T0 > 0.0)) throw std::invalid_argument("geometric schedule: T0 must be positive");
  if (l == 0) throw std::invalid_argument("geometric schedule: l must be at least 1");
  if (N == 0) throw std::invalid_argument("geometric schedule: N must be at least 1");
  TemperatureSchedule s;
  s.kind_ = Kind::geometric;
  s.T0_ = T0;
  s.l_ = l;
  s.N_ = N;
  return s;
}

TemperatureSchedule TemperatureSchedule::adaptive(double eta, double initial) {
  if (!(eta >= 0.1 && eta <= 0.9))
    throw std::invalid_argument("adaptive schedule: eta must lie in [0.1, 0.9]");
  if (initial < 0.0) throw std::invalid_argument("adaptive schedule: negative initial temperature");
  TemperatureSchedule s;
  s.kind_ = Kind::adaptive;
  s.eta_ = eta;
  s.T0_ = initial;
  return s;
}

TemperatureSchedule TemperatureSchedule::constant(double T) {
  if (!(T > 0.0)) throw std::invalid_argument("constant schedule: T must be positive");
  TemperatureSchedule s;
  s.kind_ = Kind::constant;
  s.T0_ = T;
  return s;
}

TemperatureSchedule TemperatureSchedule::epoch_decay(double T0, double factor) {
  if (!(T0 > 0.0)) throw std::invalid_argument("epoch-decay schedule: T0 must be positive");
  if (!(factor > 0.0 && factor <= 1.0))
    throw std::invalid_argument("epoch-decay schedule: factor must lie in (0, 1]");
  TemperatureSchedule s;
  s.kind_ = Kind::epoch_decay;
  s.T0_ = T0;
  s.factor_ = factor;
  return s;
}

double TemperatureSchedule::next() {
  if (kind_ == Kind::adaptive)
    throw std::logic_error("adaptive schedule needs the critical temperature");
  return next(0.0);
}

double TemperatureSchedule::next(double critical) {
  ++index_;
  switch (kind_) {
    case Kind::geometric:
      current_ = geometric_temperature(T0_, l_, N_, index_);
      break;
    case Kind::constant:
      current_ = T0_;
      break;
    case Kind::epoch_decay:
      current_ = index_ == 1 ? T0_ : current_ * factor_;
      break;
    case Kind::adaptive: {
      const double target = eta_ * critical;
      if (index_ == 1) {
        const double start = T0_ > 0.0 ? T0_ : target;
        current_ = target > 0.0 ? std::min(start, target) : start;
        if (!(current_ > 0.0)) current_ = 1.0;
      } else if (target > 0.0) {
        current_ = std::min(current_, target);
      } else {
        // Zero slack: the state sits at a fixed point, keep cooling.
        current_ *= eta_;
      }
      break;
    }
  }
  return current_;
}

std::string TemperatureSchedule::describe() const {
  std::ostringstream os;
  os << to_string(kind_);
  switch (kind_) {
    case Kind::geometric: os << ":" << T0_ << ",l=" << l_ << ",N=" << N_; break;
    case Kind::constant: os << ":" << T0_; break;
    case Kind::adaptive: os << ":" << eta_; break;
    case Kind::epoch_decay: os << ":" << T0_ << ",factor=" << factor_; break;
  }
  return os.str();
}

const char* to_string(TemperatureSchedule::Kind kind) {
  switch (kind) {
    case TemperatureSchedule::Kind::geometric: return "geometric";
    case TemperatureSchedule::Kind::adaptive: return "adaptive";
    case TemperatureSchedule::Kind::constant: return "constant";
    case TemperatureSchedule::Kind::epoch_decay: return "epoch-decay";
  }
  return "unknown";
}

}  // namespace gibbs_ot
