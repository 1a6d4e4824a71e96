#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "chemstack/chem/network.hpp"
#include "chemstack/rng.hpp"

namespace chemstack::chem {

// Law of mass action: k_r * prod_s c_s^chi(s,r) over the reactants.
double loma_rate(const Reaction& r, const NetworkState& state);

// Firing discipline.
//  Stochastic:    Gillespie's direct method. Time to next firing is
//                 Exponential(sum of rates); the reaction is chosen with
//                 probability rate/sum. Exact for the underlying jump process.
//  Deterministic: every reaction accumulates "work" at its current rate and
//                 fires whenever the accumulator reaches 1, i.e. at intervals
//                 1/rate under constant conditions. Rates are refreshed after
//                 every event, and accumulated progress is kept across
//                 interruptions (arrivals, other firings). Reproducible runs
//                 for unit tests without any randomness.
enum class StepMode { Stochastic, Deterministic };

struct TraceEvent {
  enum class Kind { Reaction, Arrival } kind;
  double time;
  std::size_t id;  // reaction index or inflow index

  bool operator==(const TraceEvent&) const = default;
};

// Outcome of one firing; emitted packets are handed back to the caller.
struct FireOutcome {
  std::size_t reaction = 0;
  const std::string* emit_tag = nullptr;  // nullptr = no emission
  std::vector<Packet> emitted;
};

// Piecewise-constant rate description: `rate` holds until time `until`.
// Exact Poisson (or evenly-spaced) arrivals can be generated for any source
// that can describe itself this way; on/off sources are the motivating case.
struct RateSegment {
  double rate = 0.0;
  double until = std::numeric_limits<double>::infinity();
};
using RateFn = std::function<RateSegment(double t)>;

RateFn constant_rate(double v);
// Alternating on/off phases, starting with "on" at t = phase0.
RateFn on_off_rate(double on_rate, double on_len, double off_len,
                   double phase0 = 0.0);

// Walk the piecewise-constant rate forward from `from` until `work` units of
// integrated rate have been consumed; returns the reaching time (infinity if
// the rate dries up forever first). The basis of both Poisson thinning-free
// sampling (work ~ Exp(1)) and evenly spaced generation (work = 1).
double advance_by_work(const RateFn& rate, double from, double work);

// Binds a network to a state and drives it: reaction firings, external
// inflows, emit callbacks, and an optional event trace. The sampling helpers
// (next_reaction_delay / fire) are exposed separately so an outer event
// calendar can interleave chemistry with other simulation events; run_until
// is the self-contained loop used for standalone studies.
class Scheduler {
 public:
  Scheduler(const ReactionNetwork& net, NetworkState& state,
            StepMode mode = StepMode::Stochastic);

  const ReactionNetwork& net() const { return *net_; }
  NetworkState& state() { return *state_; }
  StepMode mode() const { return mode_; }

  // --- inflows -----------------------------------------------------------
  // Returns an inflow handle (index). Stochastic mode: Poisson arrivals at
  // rate v(t); deterministic mode: evenly spaced arrivals. make_packet may be
  // empty for counter species.
  std::size_t attach_inflow(SpeciesId species, RateFn rate,
                            std::function<Packet(double)> make_packet = {});

  // --- single-step interface --------------------------------------------
  double total_rate() const;

  // Delay from state->clock until the next reaction firing, plus the reaction
  // index. Infinite delay when no reaction is eligible. Stochastic sampling is
  // memoryless, so the result may be discarded and re-sampled after any state
  // change; deterministic mode reads (but does not advance) the work
  // accumulators.
  struct NextFiring {
    double delay = std::numeric_limits<double>::infinity();
    std::size_t reaction = 0;
  };
  NextFiring next_reaction_delay(Rng& rng) const;

  // Advance the clock to `t` (accrues deterministic work accumulators) and
  // fire reaction `r`.
  FireOutcome fire_at(double t, std::size_t r);

  // Deliver one external arrival into `species` at time t.
  void arrival_at(double t, std::size_t inflow, Packet pkt);
  // Next pending arrival among all inflows, or nullopt.
  struct PendingArrival {
    double time;
    std::size_t inflow;
  };
  std::optional<PendingArrival> peek_arrival(Rng& rng);

  // One event (reaction or arrival), whichever comes first. Returns false if
  // nothing can happen before t_limit.
  bool step(Rng& rng, double t_limit = std::numeric_limits<double>::infinity());

  // --- batch interface ---------------------------------------------------
  struct RunResult {
    std::vector<TraceEvent> trace;
    std::uint64_t reaction_events = 0;
    std::uint64_t arrival_events = 0;
  };
  RunResult run_until(Rng& rng, double t_end, bool keep_trace = true);

  // Callback invoked for every firing that carries an emit tag.
  using EmitHandler =
      std::function<void(const std::string& tag, std::vector<Packet>&&, double t)>;
  void set_emit_handler(EmitHandler h) { on_emit_ = std::move(h); }

  // Invalidate any cached arrival schedule (call after externally changing an
  // inflow's rate function).
  void invalidate_arrivals();

 private:
  struct Inflow {
    SpeciesId species;
    RateFn rate;
    std::function<Packet(double)> make_packet;
    double next_time = -1.0;  // < clock means "not sampled yet"
    double credit = 0.0;      // deterministic-mode fractional arrival work
  };

  void advance_clock(double t);
  void schedule_arrival(Inflow& f, Rng& rng);

  const ReactionNetwork* net_;
  NetworkState* state_;
  StepMode mode_;
  std::vector<Inflow> inflows_;
  std::vector<double> work_;  // deterministic-mode per-reaction accumulators
  EmitHandler on_emit_;
  std::uint64_t next_packet_id_ = 1ull << 48;  // inflow-generated packets
};

}  // namespace chemstack::chem
