#include "chemstack/chem/scheduler.hpp"

#include <cmath>

namespace chemstack::chem {

double loma_rate(const Reaction& r, const NetworkState& state) {
  double v = r.k;
  for (auto& [s, chi] : r.reactants) {
    const double c = static_cast<double>(state.count(s));
    for (int i = 0; i < chi; ++i) v *= c;
  }
  return v;
}

RateFn constant_rate(double v) {
  return [v](double) { return RateSegment{v}; };
}

RateFn on_off_rate(double on_rate, double on_len, double off_len,
                   double phase0) {
  const double period = on_len + off_len;
  return [=](double t) -> RateSegment {
    double local = t - phase0;
    if (local < 0.0) return {0.0, phase0};
    const double in_period = std::fmod(local, period);
    const double period_start = t - in_period;
    if (in_period < on_len) return {on_rate, period_start + on_len};
    return {0.0, period_start + period};
  };
}

Scheduler::Scheduler(const ReactionNetwork& net, NetworkState& state,
                     StepMode mode)
    : net_(&net), state_(&state), mode_(mode),
      work_(net.reactions().size(), 0.0) {
  net.validate();
  state.check();
}

std::size_t Scheduler::attach_inflow(SpeciesId species, RateFn rate,
                                     std::function<Packet(double)> make_packet) {
  inflows_.push_back({species, std::move(rate), std::move(make_packet)});
  return inflows_.size() - 1;
}

double Scheduler::total_rate() const {
  double a0 = 0.0;
  for (const auto& r : net_->reactions()) a0 += loma_rate(r, *state_);
  return a0;
}

Scheduler::NextFiring Scheduler::next_reaction_delay(Rng& rng) const {
  const auto& reactions = net_->reactions();
  if (mode_ == StepMode::Stochastic) {
    double a0 = 0.0;
    // Stack buffer covers every network in this artifact; fall back otherwise.
    double local[16];
    std::vector<double> heap;
    double* rates = local;
    if (reactions.size() > 16) {
      heap.resize(reactions.size());
      rates = heap.data();
    }
    for (std::size_t i = 0; i < reactions.size(); ++i) {
      rates[i] = loma_rate(reactions[i], *state_);
      a0 += rates[i];
    }
    if (a0 <= 0.0) return {};
    NextFiring nf;
    nf.delay = rng.exponential(a0);
    nf.reaction = rng.pick_weighted({rates, reactions.size()}, a0);
    return nf;
  }
  // Deterministic: each reaction fires when its work accumulator reaches 1.
  NextFiring nf;
  for (std::size_t i = 0; i < reactions.size(); ++i) {
    const double rate = loma_rate(reactions[i], *state_);
    if (rate <= 0.0) continue;
    const double dt = (1.0 - work_[i]) / rate;
    if (dt < nf.delay) {
      nf.delay = dt;
      nf.reaction = i;
    }
  }
  return nf;
}

void Scheduler::advance_clock(double t) {
  if (t < state_->clock) return;
  if (mode_ == StepMode::Deterministic) {
    const double dt = t - state_->clock;
    const auto& reactions = net_->reactions();
    for (std::size_t i = 0; i < reactions.size(); ++i) {
      const double rate = loma_rate(reactions[i], *state_);
      if (rate > 0.0) work_[i] += rate * dt;
    }
  }
  state_->clock = t;
}

FireOutcome Scheduler::fire_at(double t, std::size_t ri) {
  advance_clock(t);
  const Reaction& r = net_->reactions().at(ri);

  FireOutcome out;
  out.reaction = ri;

  // Consume reactants; payload molecules dequeue FIFO.
  std::vector<Packet> carried;
  for (auto& [s, chi] : r.reactants) {
    if (state_->counts[s] < chi)
      throw NetworkError("reaction '" + r.id + "' fired without reactants");
    if (net_->is_payload(s)) {
      auto& q = state_->queues[s];
      for (int i = 0; i < chi; ++i) {
        carried.push_back(std::move(q.front()));
        q.pop_front();
      }
    }
    state_->counts[s] -= chi;
  }

  // Produce products. If the reaction has a payload product, the consumed
  // packet rides into it; when several were consumed they merge onto the
  // first, which absorbs their bytes so no payload is lost.
  auto payload_prod = net_->payload_product(r);
  for (auto& [s, xi] : r.products) {
    if (payload_prod && s == *payload_prod) {
      Packet moved;
      if (!carried.empty()) {
        moved = std::move(carried.front());
        for (std::size_t i = 1; i < carried.size(); ++i) {
          moved.merged += carried[i].merged;
          moved.payload_len += carried[i].payload_len;
        }
      }
      state_->queues[s].push_back(std::move(moved));
      state_->counts[s] += 1;  // xi validated to be 1
    } else {
      state_->counts[s] += xi;
    }
  }

  if (!r.emit_tag.empty()) {
    out.emit_tag = &r.emit_tag;
    if (!payload_prod) out.emitted = std::move(carried);
    if (on_emit_) {
      // The handler takes ownership of the emitted packets.
      on_emit_(r.emit_tag, std::move(out.emitted), t);
      out.emitted.clear();
    }
  }

  if (mode_ == StepMode::Deterministic) work_[ri] -= 1.0;
  return out;
}

double advance_by_work(const RateFn& rate, double from, double work) {
  double t = from;
  for (int guard = 0; guard < 100000; ++guard) {
    const RateSegment seg = rate(t);
    const double horizon = seg.until;
    if (seg.rate > 0.0) {
      const double dt = work / seg.rate;
      if (t + dt <= horizon) return t + dt;
      work -= (horizon - t) * seg.rate;
    }
    if (!std::isfinite(horizon))
      return std::numeric_limits<double>::infinity();
    t = horizon;
  }
  throw NetworkError("rate function made no progress");
}

void Scheduler::schedule_arrival(Inflow& f, Rng& rng) {
  if (f.next_time >= state_->clock) return;
  // Arrival "work" is Exp(1) units in stochastic mode, exactly 1 in
  // deterministic mode, minus any credit carried from a previous partial
  // segment.
  double need = (mode_ == StepMode::Stochastic) ? rng.exponential(1.0) : 1.0;
  need -= f.credit;
  f.credit = 0.0;
  f.next_time = advance_by_work(f.rate, state_->clock, need);
}

std::optional<Scheduler::PendingArrival> Scheduler::peek_arrival(Rng& rng) {
  std::optional<PendingArrival> best;
  for (std::size_t i = 0; i < inflows_.size(); ++i) {
    schedule_arrival(inflows_[i], rng);
    const double t = inflows_[i].next_time;
    if (!std::isfinite(t)) continue;
    if (!best || t < best->time) best = PendingArrival{t, i};
  }
  return best;
}

void Scheduler::arrival_at(double t, std::size_t idx, Packet pkt) {
  advance_clock(t);
  Inflow& f = inflows_.at(idx);
  if (net_->is_payload(f.species))
    state_->enqueue(f.species, std::move(pkt));
  else
    state_->counts[f.species] += 1;
  f.next_time = -1.0;  // consumed; re-sample lazily
}

void Scheduler::invalidate_arrivals() {
  for (auto& f : inflows_) {
    f.next_time = -1.0;
    f.credit = 0.0;
  }
}

bool Scheduler::step(Rng& rng, double t_limit) {
  const auto arrival = peek_arrival(rng);
  const NextFiring nf = next_reaction_delay(rng);
  const double t_fire = state_->clock + nf.delay;

  if (arrival && arrival->time <= t_fire) {
    if (arrival->time > t_limit) return false;
    Inflow& f = inflows_[arrival->inflow];
    Packet pkt;
    if (f.make_packet) pkt = f.make_packet(arrival->time);
    pkt.id = pkt.id ? pkt.id : next_packet_id_++;
    arrival_at(arrival->time, arrival->inflow, std::move(pkt));
    return true;
  }
  if (!std::isfinite(t_fire) || t_fire > t_limit) return false;
  fire_at(t_fire, nf.reaction);
  return true;
}

Scheduler::RunResult Scheduler::run_until(Rng& rng, double t_end,
                                          bool keep_trace) {
  RunResult res;
  while (true) {
    const auto arrival = peek_arrival(rng);
    const NextFiring nf = next_reaction_delay(rng);
    const double t_fire = state_->clock + nf.delay;

    const bool arrival_first = arrival && arrival->time <= t_fire;
    const double t_next = arrival_first
                              ? arrival->time
                              : t_fire;
    if (!std::isfinite(t_next) || t_next > t_end) break;

    if (arrival_first) {
      Inflow& f = inflows_[arrival->inflow];
      Packet pkt;
      if (f.make_packet) pkt = f.make_packet(arrival->time);
      pkt.id = pkt.id ? pkt.id : next_packet_id_++;
      arrival_at(arrival->time, arrival->inflow, std::move(pkt));
      ++res.arrival_events;
      if (keep_trace)
        res.trace.push_back(
            {TraceEvent::Kind::Arrival, t_next, arrival->inflow});
    } else {
      fire_at(t_fire, nf.reaction);
      ++res.reaction_events;
      if (keep_trace)
        res.trace.push_back({TraceEvent::Kind::Reaction, t_next, nf.reaction});
    }
  }
  if (t_end > state_->clock) advance_clock(t_end);
  return res;
}

}  // namespace chemstack::chem
