#include "chemstack/sim/link.hpp"

#include <memory>

namespace chemstack::sim {

Link::Link(Calendar& cal, Rng rng, LinkConfig cfg)
    : cal_(&cal), rng_(rng), cfg_(cfg) {}

void Link::transmit(Packet&& frame, double t) {
  if (cfg_.require_ipv4) {
    // The wire framing sits on top; the carried protocol is the header
    // directly beneath it.
    const std::size_t n = frame.headers.size();
    if (n < 2 || frame.headers[n - 2].proto != Proto::IPv4) {
      ++n_.drops_nonip;  // rejected at the door: no payload counters move
      return;
    }
  }
  ++n_.our_frames_in;
  n_.our_payload_in += static_cast<std::uint64_t>(frame.payload_len);
  accept({std::move(frame), false}, t);
}

void Link::inject_cross(int bytes, double t) {
  Packet p;
  p.payload_len = bytes;
  ++n_.cross_frames_in;
  accept({std::move(p), true}, t);
}

void Link::accept(Frame&& f, double t) {
  if (busy_) {
    const long long len = f.pkt.wire_len();
    if (queued_bytes_ + len > cfg_.queue_bytes) {
      if (f.cross) {
        ++n_.cross_drops_overflow;
      } else {
        ++n_.drops_overflow;
        n_.our_payload_dropped +=
            static_cast<std::uint64_t>(f.pkt.payload_len);
      }
      return;
    }
    queued_bytes_ += len;
    q_.push_back(std::move(f));
    return;
  }
  begin_service(std::move(f), t);
}

void Link::begin_service(Frame&& f, double t) {
  busy_ = true;
  in_service_ = std::move(f);
  const double done = t + in_service_.pkt.wire_len() / cfg_.bandwidth;
  cal_->call_at(done, [this] { finish_service(cal_->now()); });
}

void Link::finish_service(double t) {
  Frame f = std::move(in_service_);
  busy_ = false;

  if (!f.cross) {
    if (cfg_.loss > 0.0 && rng_.uniform01() < cfg_.loss) {
      ++n_.drops_loss;
      n_.our_payload_dropped += static_cast<std::uint64_t>(f.pkt.payload_len);
    } else {
      // Hand off after the propagation delay; the packet rides the closure.
      auto pkt = std::make_shared<Packet>(std::move(f.pkt));
      cal_->call_at(t + cfg_.delay, [this, pkt] {
        ++n_.our_frames_delivered;
        n_.our_payload_delivered +=
            static_cast<std::uint64_t>(pkt->payload_len);
        if (deliver_) deliver_(std::move(*pkt), cal_->now());
      });
    }
  }

  if (!q_.empty()) {
    Frame next = std::move(q_.front());
    q_.pop_front();
    queued_bytes_ -= next.pkt.wire_len();
    begin_service(std::move(next), t);
  }
}

}  // namespace chemstack::sim
