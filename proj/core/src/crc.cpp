#include "chemstack/crc/crc.hpp"

#include <algorithm>
#include <cmath>

#include "chemstack/flow/analysis.hpp"

namespace chemstack::crc {

void CrcConfig::validate() const {
  if (e0 < 1.0 || e0 != std::floor(e0))
    throw CrcError("e0 must be a positive integer (token count)");
  if (k1 <= 0.0 || k2 <= 0.0) throw CrcError("k1 and k2 must be positive");
  if (k_F < 0.0) throw CrcError("k_F must be non-negative");
  if (sensor_window <= 0.0) throw CrcError("sensor_window must be positive");
}

namespace {
// Validate before the network builder sees the rate constants, so a bad
// configuration always surfaces as CrcError.
flow::CrcNetwork topo_for(const CrcConfig& cfg) {
  cfg.validate();
  return flow::make_crc_network(cfg.k1, cfg.k2, cfg.k_F);
}
}  // namespace

Crc::Crc(CrcConfig cfg, chem::StepMode mode)
    : Crc(cfg, topo_for(cfg), mode) {}

Crc::Crc(CrcConfig cfg, flow::CrcNetwork topo, chem::StepMode mode)
    : cfg_(cfg),
      net_(std::move(topo.net)),
      S_(topo.S),
      E_(topo.E),
      ES_(topo.ES),
      F_(topo.F),
      state_(net_),
      sched_(net_, state_, mode) {
  state_.set_count(E_, static_cast<std::int64_t>(cfg_.e0));
  ext_inflow_ = sched_.attach_inflow(S_, chem::constant_rate(0.0));
  sched_.set_emit_handler(
      [this](const std::string&, std::vector<Packet>&& pkts, double t) {
        for (auto& p : pkts) {
          ++transmitted_;
          note_out(t, p.crc_enqueue >= 0.0 ? t - p.crc_enqueue : 0.0);
          if (on_transmit_) on_transmit_(std::move(p), t);
        }
        // A token has returned to the free pool by now (directly for the
        // two-reaction loop, at the hand-off to F otherwise) - a good moment
        // to apply any outstanding shrink of the pool.
        absorb_pending_removals();
      });
}

void Crc::note_in(double t) {
  ++enqueued_;
  in_times_.push_back(t);
  const double horizon = t - cfg_.sensor_window;
  while (!in_times_.empty() && in_times_.front() < horizon)
    in_times_.pop_front();
}

void Crc::note_out(double t, double delay) {
  out_times_.push_back(t);
  delays_.emplace_back(t, delay);
  const double horizon = t - cfg_.sensor_window;
  while (!out_times_.empty() && out_times_.front() < horizon)
    out_times_.pop_front();
  while (!delays_.empty() && delays_.front().first < horizon)
    delays_.pop_front();
}

void Crc::absorb_pending_removals() {
  if (pending_removal_ == 0) return;
  const std::int64_t take = std::min(pending_removal_, state_.count(E_));
  if (take == 0) return;
  state_.set_count(E_, state_.count(E_) - take);
  pending_removal_ -= take;
  cached_.reset();
}

void Crc::enqueue(Packet pkt, double t) {
  pkt.crc_enqueue = t;
  // Routed through a zero-rate inflow so the scheduler sees the clock advance
  // (deterministic-mode work must accrue over the gap).
  sched_.arrival_at(t, ext_inflow_, std::move(pkt));
  note_in(t);
  cached_.reset();
}

std::optional<double> Crc::peek(Rng& rng) {
  absorb_pending_removals();
  if (!cached_) {
    const auto nf = sched_.next_reaction_delay(rng);
    if (!std::isfinite(nf.delay)) return std::nullopt;
    cached_ = Cached{state_.clock + nf.delay, nf.reaction};
  }
  return cached_->t;
}

void Crc::fire_pending(double t) {
  if (!cached_) throw CrcError("fire_pending without a peeked reaction");
  const std::size_t r = cached_->reaction;
  cached_.reset();
  sched_.fire_at(t, r);  // emit handler does the transmit accounting
  absorb_pending_removals();
}

void Crc::attach_source(chem::RateFn rate, int payload_len) {
  sched_.attach_inflow(S_, std::move(rate), [this, payload_len](double t) {
    Packet p;
    p.payload_len = payload_len;
    p.created = t;
    p.crc_enqueue = t;
    note_in(t);
    return p;
  });
}

void Crc::run_until(Rng& rng, double t_end) {
  cached_.reset();  // the scheduler loop samples for itself
  sched_.run_until(rng, t_end, /*keep_trace=*/false);
  absorb_pending_removals();
}

void Crc::set_token_target(std::int64_t e0_new) {
  if (e0_new < 1) throw CrcError("token target must be >= 1");
  std::int64_t delta = e0_new - token_total();
  if (delta > 0) {
    // Cancel queued removals first, then mint the remainder as free tokens.
    const std::int64_t cancel = std::min(delta, pending_removal_);
    pending_removal_ -= cancel;
    delta -= cancel;
    if (delta > 0) state_.set_count(E_, state_.count(E_) + delta);
  } else if (delta < 0) {
    pending_removal_ += -delta;
  }
  cfg_.e0 = static_cast<double>(e0_new);
  cached_.reset();
  absorb_pending_removals();
}

std::vector<Packet> Crc::drain_queues() {
  std::vector<Packet> out;
  auto take = [&](chem::SpeciesId s) {
    auto& q = state_.queues[s];
    for (auto& p : q)
      if (p.id != 0) out.push_back(std::move(p));  // skip synthetic fill
    q.clear();
    state_.counts[s] = 0;
  };
  // Closest to the wire first, then in-service, then the waiting queue.
  if (F_) take(*F_);
  const std::int64_t in_service = state_.count(ES_);
  take(ES_);
  take(S_);
  // Tokens bound in ES return to the free pool.
  state_.set_count(E_, state_.count(E_) + in_service);
  cached_.reset();
  absorb_pending_removals();
  return out;
}

std::uint64_t Crc::queued_payload() const {
  std::uint64_t sum = 0;
  auto add = [&](chem::SpeciesId s) {
    for (const Packet& p : state_.queues[s])
      if (p.id != 0) sum += static_cast<std::uint64_t>(p.payload_len);
  };
  add(S_);
  add(ES_);
  if (F_) add(*F_);
  return sum;
}

CrcSensors Crc::sensors(double now) const {
  const double horizon = now - cfg_.sensor_window;
  while (!in_times_.empty() && in_times_.front() < horizon)
    in_times_.pop_front();
  while (!out_times_.empty() && out_times_.front() < horizon)
    out_times_.pop_front();
  while (!delays_.empty() && delays_.front().first < horizon)
    delays_.pop_front();

  CrcSensors s;
  s.queue_len = state_.count(S_);
  // Early in a run the window has not filled yet; scale by elapsed time so
  // the rates are not underestimated.
  const double w = std::min(cfg_.sensor_window, std::max(now, 1e-9));
  s.in_rate = static_cast<double>(in_times_.size()) / w;
  s.out_rate = static_cast<double>(out_times_.size()) / w;
  if (!delays_.empty()) {
    double sum = 0.0;
    for (auto& [t, d] : delays_) sum += d;
    s.mean_delay = sum / static_cast<double>(delays_.size());
  }
  return s;
}

}  // namespace chemstack::crc
