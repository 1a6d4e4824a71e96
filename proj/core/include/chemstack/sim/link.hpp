#pragma once

#include <deque>

#include "chemstack/packet.hpp"
#include "chemstack/rng.hpp"
#include "chemstack/sim/calendar.hpp"

namespace chemstack::sim {

struct LinkConfig {
  double bandwidth = 1e6;  // serialization rate, B/s
  double delay = 0.01;     // propagation, s
  double loss = 0.0;       // Bernoulli per frame, drawn at serialization end
  long long queue_bytes = 1 << 20;  // waiting room (frame in service excluded)
  // Frames whose header under the wire framing is not IPv4 are dropped at
  // ingress - the inter-node link only carries IP.
  bool require_ipv4 = true;
};

struct LinkCounters {
  std::uint64_t our_frames_in = 0;
  std::uint64_t our_frames_delivered = 0;
  std::uint64_t our_payload_in = 0;  // bytes, after the ingress check
  std::uint64_t our_payload_delivered = 0;
  std::uint64_t our_payload_dropped = 0;
  std::uint64_t drops_nonip = 0;
  std::uint64_t drops_overflow = 0;  // ours only
  std::uint64_t drops_loss = 0;      // ours only
  std::uint64_t cross_frames_in = 0;
  std::uint64_t cross_drops_overflow = 0;
};

// Unidirectional point-to-point pipe: single-server FIFO serialization at
// `bandwidth`, then fixed propagation delay, with Bernoulli loss and a finite
// waiting room shared with injected cross-traffic.
class Link {
 public:
  Link(Calendar& cal, Rng rng, LinkConfig cfg);

  void set_deliver(std::function<void(Packet&&, double)> cb) {
    deliver_ = std::move(cb);
  }

  // Frame from the local Ethernet device.
  void transmit(Packet&& frame, double t);
  // Background frame competing for the same serializer; never delivered.
  void inject_cross(int bytes, double t);

  const LinkCounters& counters() const { return n_; }
  // Our payload bytes currently queued, in service, or propagating.
  std::uint64_t our_payload_in_flight() const {
    return n_.our_payload_in - n_.our_payload_delivered -
           n_.our_payload_dropped;
  }

 private:
  struct Frame {
    Packet pkt;
    bool cross = false;
  };

  void accept(Frame&& f, double t);
  void begin_service(Frame&& f, double t);
  void finish_service(double t);

  Calendar* cal_;
  Rng rng_;
  LinkConfig cfg_;
  std::function<void(Packet&&, double)> deliver_;

  std::deque<Frame> q_;
  long long queued_bytes_ = 0;
  bool busy_ = false;
  Frame in_service_;
  LinkCounters n_;
};

}  // namespace chemstack::sim
