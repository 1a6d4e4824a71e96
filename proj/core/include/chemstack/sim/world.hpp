#pragma once

#include "chemstack/proto/modules.hpp"
#include "chemstack/sim/link.hpp"
#include "chemstack/sim/trial_record.hpp"
#include "chemstack/stack/compose.hpp"

namespace chemstack::sim {

// Background load sharing the data-direction link: bursts of fixed-size
// frames at `mean` B/s long-run.
struct CrossTraffic {
  double mean = 0.0;
  int frame = 1000;      // B
  double on_len = 0.5;   // s
  double off_len = 0.5;  // s
};

// One trial's world: two nodes running the same blueprint, joined by a pair
// of unidirectional links. Node A talks (source app), node B listens and
// acknowledges (sink app).
struct WorldConfig {
  LinkConfig link;  // both directions
  CrossTraffic cross;
  proto::SourceProfile source;
  int ack_payload = 64;  // B per app-level acknowledgement
  proto::StackParams params;

  double measure = 20.0;           // measurement window, s
  double min_settle = 2.0;         // warm-up floor without a CRC, s
  double settle_margin = 1.0;      // headroom over the settle estimate, s
  double settle_tolerance = 0.05;  // residual transient allowed at the cut
  bool deterministic = false;      // expectation-mode chemistry and arrivals
};

// Whole-run totals (settle window included) for conservation checks, all in
// payload bytes of the data direction.
struct WorldAudit {
  std::uint64_t source_payload = 0;          // offered at A's app
  std::uint64_t delivered_payload = 0;       // arrived at B's app
  std::uint64_t link_dropped_payload = 0;    // lost on the A->B link
  std::uint64_t link_in_flight_payload = 0;  // still on the A->B link
  std::uint64_t crc_buffered_payload = 0;    // held in A's rate controller
};

// Compose `genome` on both nodes, run one measured trial, and return the
// record. Composition failures return an invalid record with the reason
// instead of running. The measurement window opens after a settle period:
// the flow-level transient estimate (plus margin) when a CRC is on the data
// path, min_settle otherwise. `audit` (optional) receives end-of-run totals
// taken before teardown.
TrialRecord run_trial(const stack::GenomeLayout& layout,
                      const stack::Genome& genome, const WorldConfig& cfg,
                      std::uint64_t seed, WorldAudit* audit = nullptr);

}  // namespace chemstack::sim
