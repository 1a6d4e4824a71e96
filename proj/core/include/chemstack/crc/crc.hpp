#pragma once

#include <deque>
#include <functional>
#include <optional>

#include "chemstack/chem/scheduler.hpp"

namespace chemstack::flow {
struct CrcNetwork;
}

namespace chemstack::crc {

struct CrcError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parameters of the chemical rate controller. The token count e0 fixes the
// maximum sustained transmit rate (e0 * k2); k_F > 0 inserts the low-pass
// output stage whose rate constant sets the smoothing cutoff. k1 and k2 are
// normally left at 1 and the behaviour steered through e0 / k_F alone.
struct CrcConfig {
  double e0 = 1.0;
  double k1 = 1.0;
  double k2 = 1.0;
  double k_F = 0.0;            // 0 = output stage disabled
  double sensor_window = 1.0;  // sliding window for rate/delay sensors [s]

  // Which parameters an evolution layer may expose as genes.
  bool evolve_e0 = true;
  bool evolve_k_F = false;

  void validate() const;
};

struct CrcSensors {
  std::int64_t queue_len = 0;  // packets waiting in S
  double in_rate = 0.0;        // packets/s over the sensor window
  double out_rate = 0.0;
  double mean_delay = 0.0;     // enqueue->transmit, over the sensor window
};

// A queue whose service process is the reaction loop
//     S + E -k1-> ES,   ES -k2-> E (+ transmit)        (k_F = 0)
// or  S + E -k1-> ES,   ES -k2-> E + F,   F -k_F-> transmit
// S holds waiting packets, E free tokens, ES tokens in service. Tokens are
// conserved (c_E + c_ES = e0 always), which is what caps the output rate.
//
// Two drive styles share the same chemistry:
//  - standalone: attach_source + run_until (chem scheduler loop), used by
//    closed studies and tests;
//  - externally clocked: enqueue / peek / fire_pending, used when an event
//    calendar owns time and packets arrive from a protocol stack above.
class Crc {
 public:
  explicit Crc(CrcConfig cfg,
               chem::StepMode mode = chem::StepMode::Stochastic);

  const CrcConfig& config() const { return cfg_; }
  chem::NetworkState& state() { return state_; }
  const chem::ReactionNetwork& network() const { return net_; }

  std::int64_t free_tokens() const { return state_.count(E_); }
  std::int64_t busy_tokens() const { return state_.count(ES_); }
  std::int64_t queue_len() const { return state_.count(S_); }
  // Effective pool size. While a shrink is being absorbed the earmarked
  // tokens are still alive in E/ES, so they are subtracted here; the value
  // equals the configured e0 at all times.
  std::int64_t token_total() const {
    return free_tokens() + busy_tokens() - pending_removal_;
  }

  std::uint64_t enqueued_total() const { return enqueued_; }
  std::uint64_t transmitted_total() const { return transmitted_; }
  void restore_counters(std::uint64_t enq, std::uint64_t tx) {
    enqueued_ = enq;
    transmitted_ = tx;
  }

  // Packets that leave through the transmit reaction.
  using TransmitHandler = std::function<void(Packet&&, double t)>;
  void set_transmit_handler(TransmitHandler h) { on_transmit_ = std::move(h); }

  // --- externally clocked interface -------------------------------------
  void enqueue(Packet pkt, double t);

  // Next firing time (absolute), sampled once and cached; invalidated by any
  // state change. nullopt when no reaction is eligible.
  std::optional<double> peek(Rng& rng);
  // Fire the cached reaction; `t` must equal the peeked time.
  void fire_pending(double t);

  // --- standalone interface ---------------------------------------------
  void attach_source(chem::RateFn rate, int payload_len);
  // Advance chemistry and source arrivals to t_end.
  void run_until(Rng& rng, double t_end);

  // Retarget the token pool. Surplus tokens are added to E immediately;
  // a deficit is taken from free tokens first and any remainder is absorbed
  // as busy tokens return (ES in flight is never touched).
  void set_token_target(std::int64_t e0_new);

  // Remove and return all queued/in-service packets (teardown support).
  std::vector<Packet> drain_queues();

  // Payload bytes currently held inside the controller (waiting, in service,
  // or in the output stage).
  std::uint64_t queued_payload() const;

  CrcSensors sensors(double now) const;

 private:
  Crc(CrcConfig cfg, flow::CrcNetwork topo, chem::StepMode mode);

  void note_in(double t);
  void note_out(double t, double delay);
  void absorb_pending_removals();
  void after_fire(chem::FireOutcome&& out, double t);

  CrcConfig cfg_;
  chem::ReactionNetwork net_;
  chem::SpeciesId S_, E_, ES_;
  std::optional<chem::SpeciesId> F_;
  chem::NetworkState state_;
  chem::Scheduler sched_;
  std::size_t ext_inflow_ = 0;  // zero-rate inflow used by enqueue()
  TransmitHandler on_transmit_;

  std::int64_t pending_removal_ = 0;
  std::uint64_t enqueued_ = 0;
  std::uint64_t transmitted_ = 0;

  struct Cached {
    double t;
    std::size_t reaction;
  };
  std::optional<Cached> cached_;

  // sliding-window sensors
  mutable std::deque<double> in_times_, out_times_;
  mutable std::deque<std::pair<double, double>> delays_;
};

}  // namespace chemstack::crc
