#pragma once

#include "chemstack/chem/scheduler.hpp"
#include "chemstack/sim/calendar.hpp"

namespace chemstack::sim {

// Self-rescheduling arrival generator over a piecewise-constant rate:
// Poisson arrivals normally, evenly spaced ones in deterministic mode. Must
// stay at a stable address once started (scheduled closures point back here).
class ArrivalProcess {
 public:
  ArrivalProcess(Calendar& cal, Rng rng, chem::RateFn rate,
                 std::function<void(double)> on_arrival,
                 bool deterministic = false)
      : cal_(&cal),
        rng_(rng),
        rate_(std::move(rate)),
        on_arrival_(std::move(on_arrival)),
        deterministic_(deterministic) {}

  ArrivalProcess(const ArrivalProcess&) = delete;
  ArrivalProcess& operator=(const ArrivalProcess&) = delete;

  void start(double from) { schedule(from); }

 private:
  void schedule(double from) {
    const double work = deterministic_ ? 1.0 : rng_.exponential(1.0);
    const double t = chem::advance_by_work(rate_, from, work);
    if (!std::isfinite(t)) return;
    cal_->call_at(t, [this] {
      const double now = cal_->now();
      on_arrival_(now);
      schedule(now);
    });
  }

  Calendar* cal_;
  Rng rng_;
  chem::RateFn rate_;
  std::function<void(double)> on_arrival_;
  bool deterministic_;
};

}  // namespace chemstack::sim
