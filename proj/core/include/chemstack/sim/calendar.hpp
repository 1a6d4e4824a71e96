#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace chemstack::sim {

// Min-time event queue driving one simulated world. Ties are broken by
// insertion sequence number, so a run's event order is fully reproducible.
class Calendar {
 public:
  double now() const { return now_; }
  bool empty() const { return heap_.empty(); }
  std::size_t pending() const { return heap_.size(); }
  std::uint64_t executed() const { return executed_; }

  // Schedule fn at absolute time t; times in the past fire at the current
  // clock (still in queue order).
  void call_at(double t, std::function<void()> fn) {
    heap_.push_back({std::max(t, now_), seq_++, std::move(fn)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
  }

  // Execute the next event if it is due at or before t_limit.
  bool run_next(double t_limit = std::numeric_limits<double>::infinity()) {
    if (heap_.empty() || heap_.front().t > t_limit) return false;
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Event ev = std::move(heap_.back());
    heap_.pop_back();
    now_ = ev.t;  // never decreases: past times were clamped on entry
    ++executed_;
    ev.fn();
    return true;
  }

  // Drain all events due by t_end; the clock lands exactly on t_end.
  void run_until(double t_end) {
    while (run_next(t_end)) {
    }
    if (t_end > now_) now_ = t_end;
  }

 private:
  struct Event {
    double t;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {  // max-heap inversion: true when a fires after b
    bool operator()(const Event& a, const Event& b) const {
      if (a.t != b.t) return a.t > b.t;
      return a.seq > b.seq;
    }
  };

  std::vector<Event> heap_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::uint64_t executed_ = 0;
};

}  // namespace chemstack::sim
