#include "chemstack/flow/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace chemstack::flow {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Eigen::VectorXd Trajectory::at(double t) const {
  if (times.empty()) throw FlowError("empty trajectory");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  const std::size_t hi = it - times.begin();
  const std::size_t lo = hi - 1;
  const double span = times[hi] - times[lo];
  const double w = span > 0.0 ? (t - times[lo]) / span : 0.0;
  return states[lo] * (1.0 - w) + states[hi] * w;
}

Trajectory integrate(const FlowModel& model, const Eigen::VectorXd& c0,
                     const Eigen::VectorXd& inflow_values, double t_end,
                     double dt, int record_every) {
  if (dt <= 0.0) throw FlowError("integrate: dt must be positive");
  if (record_every < 1) record_every = 1;

  Trajectory traj;
  Eigen::VectorXd c = c0;
  double t = 0.0;
  traj.times.push_back(t);
  traj.states.push_back(c);

  auto f = [&](const Eigen::VectorXd& x) { return model.rhs(x, inflow_values); };

  const long steps = static_cast<long>(std::ceil(t_end / dt - 1e-12));
  for (long i = 0; i < steps; ++i) {
    const double h = std::min(dt, t_end - t);
    const Eigen::VectorXd k1 = f(c);
    const Eigen::VectorXd k2 = f(c + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(c + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(c + h * k3);
    c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    for (Eigen::Index s = 0; s < c.size(); ++s) {
      if (c(s) < 0.0) {
        // Mass-action trajectories stay non-negative analytically; a clamp
        // means the step overshot. Record it so callers can react.
        traj.clamps.push_back({t, static_cast<chem::SpeciesId>(s)});
        c(s) = 0.0;
      }
    }
    if ((i + 1) % record_every == 0 || i + 1 == steps) {
      traj.times.push_back(t);
      traj.states.push_back(c);
    }
  }
  return traj;
}

Eigen::VectorXd reaction_capacities(const FlowModel& model) {
  const auto conserved = model.conserved_sums();
  const std::size_t nr = model.n_reactions();
  const Eigen::Index ns = model.psi().rows();

  // Upper bound on each species' concentration from the conserved pools it
  // belongs to; infinity if it is in none.
  Eigen::VectorXd bound = Eigen::VectorXd::Constant(ns, kInf);
  for (const auto& w : conserved) {
    const double total = w.dot(model.c0());
    for (Eigen::Index s = 0; s < ns; ++s)
      if (w(s) > 1e-9) bound(s) = std::min(bound(s), total / w(s));
  }

  Eigen::VectorXd cap(nr);
  for (std::size_t j = 0; j < nr; ++j) {
    const auto& t = model.terms()[j];
    double c = t.k;
    for (auto& [s, chi] : t.exponents) {
      if (!std::isfinite(bound(s))) {
        c = kInf;
        break;
      }
      for (int i = 0; i < chi; ++i) c *= bound(s);
    }
    cap(j) = c;
  }

  // A reaction with an unbounded reactant can still be throttled: if one of
  // its reactants lives in a conserved pool, sustained throughput cannot
  // exceed the rate at which that reactant is regenerated by the reactions
  // producing it. Propagate to a fixpoint (caps only decrease).
  for (std::size_t pass = 0; pass <= nr + 1; ++pass) {
    bool changed = false;
    for (std::size_t j = 0; j < nr; ++j) {
      const auto& t = model.terms()[j];
      for (auto& [s, chi] : t.exponents) {
        if (!std::isfinite(bound(s))) continue;  // pooled reactants only
        double regen = 0.0;
        // Net producers of s (psi = xi - chi > 0), weighted by their caps.
        for (std::size_t j2 = 0; j2 < nr; ++j2)
          if (model.psi()(s, j2) > 0) regen += model.psi()(s, j2) * cap(j2);
        const double limit = regen / chi;
        if (limit < cap(j)) {
          cap(j) = limit;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  return cap;
}

SteadyState steady_state(const FlowModel& model,
                         const Eigen::VectorXd& inflow_values) {
  const Eigen::Index ns = model.psi().rows();
  const std::size_t nr = model.n_reactions();
  SteadyState out;

  // --- overload screen --------------------------------------------------
  const Eigen::VectorXd cap = reaction_capacities(model);
  for (std::size_t j = 0; j < model.n_inflows(); ++j) {
    const double v_in = inflow_values(j);
    if (v_in <= 0.0) continue;
    // Species fed by this inflow; its service capacity is the summed cap of
    // the reactions consuming it.
    Eigen::Index fed = -1;
    for (Eigen::Index s = 0; s < ns; ++s)
      if (model.psi()(s, nr + j) > 0) fed = s;
    if (fed < 0) continue;
    double service = 0.0;
    for (std::size_t r = 0; r < nr; ++r) {
      for (auto& [s, chi] : model.terms()[r].exponents)
        if (s == static_cast<chem::SpeciesId>(fed)) {
          service += std::isfinite(cap(r)) ? cap(r) : kInf;
          break;
        }
      if (!std::isfinite(service)) break;
    }
    if (v_in >= service) {
      out.status = SteadyState::Status::Unbounded;
      out.unbounded_species.push_back(model.species_names()[fed]);
    }
  }
  if (out.status == SteadyState::Status::Unbounded) return out;

  // --- damped Newton ----------------------------------------------------
  // Equations: Psi v(c) = 0 stacked with conservation residuals
  // w^T (c - c0) = 0; solved least-squares per step, with backtracking on
  // ||F||^2 and projection onto c >= 0.
  const auto conserved = model.conserved_sums();
  const Eigen::Index neq = ns + static_cast<Eigen::Index>(conserved.size());

  auto residual = [&](const Eigen::VectorXd& c) {
    Eigen::VectorXd F(neq);
    F.head(ns) = model.rhs(c, inflow_values);
    for (std::size_t i = 0; i < conserved.size(); ++i)
      F(ns + i) = conserved[i].dot(c - model.c0());
    return F;
  };

  Eigen::VectorXd c = model.c0().cwiseMax(0.0);
  // A cold start on the boundary (zeros) can have a rank-deficient Jacobian;
  // nudge into the interior.
  for (Eigen::Index s = 0; s < ns; ++s)
    if (c(s) == 0.0) c(s) = 1e-3;

  double scale = 1.0;
  if (inflow_values.size() > 0)
    scale = std::max(scale, inflow_values.cwiseAbs().maxCoeff());
  double best = residual(c).norm();
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd F = residual(c);
    const double fn = F.norm();
    out.newton_iterations = it;
    out.residual = fn;
    if (fn < 1e-10 * scale) break;

    Eigen::MatrixXd J(neq, ns);
    J.topRows(ns) = model.jacobian(c, inflow_values);
    for (std::size_t i = 0; i < conserved.size(); ++i)
      J.row(ns + i) = conserved[i].transpose();

    const Eigen::VectorXd dc =
        J.completeOrthogonalDecomposition().solve(-F);
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      Eigen::VectorXd trial = (c + alpha * dc).cwiseMax(0.0);
      const double tn = residual(trial).norm();
      if (tn < fn * (1.0 - 1e-4 * alpha) || tn < 1e-12 * scale) {
        c = trial;
        best = tn;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  if (best > 1e-6 * scale)
    throw FlowError("steady_state: Newton failed to converge (residual " +
                    std::to_string(best) + ")");
  out.c = c;
  return out;
}

double michaelis_menten_rate(double c_S, double e0, double k1, double k2) {
  if (e0 < 0.0 || k1 <= 0.0 || k2 <= 0.0 || c_S < 0.0)
    throw FlowError("michaelis_menten_rate: bad arguments");
  return e0 * k2 * c_S / ((k2 / k1) + c_S);
}

CrcNetwork make_crc_network(double k1, double k2, double k_F) {
  CrcNetwork c;
  c.S = c.net.add_species("S", chem::SpeciesKind::Payload);
  c.ES = c.net.add_species("ES", chem::SpeciesKind::Payload);
  c.E = c.net.add_species("E", chem::SpeciesKind::Counter);
  chem::Reaction r1;
  r1.id = "r1";
  r1.reactants = {{c.S, 1}, {c.E, 1}};
  r1.products = {{c.ES, 1}};
  r1.k = k1;
  c.net.add_reaction(std::move(r1));
  if (k_F > 0.0) {
    c.F = c.net.add_species("F", chem::SpeciesKind::Payload);
    chem::Reaction r2;
    r2.id = "r2";
    r2.reactants = {{c.ES, 1}};
    r2.products = {{c.E, 1}, {*c.F, 1}};
    r2.k = k2;
    c.net.add_reaction(std::move(r2));
    chem::Reaction r3;
    r3.id = "r3";
    r3.reactants = {{*c.F, 1}};
    r3.k = k_F;
    r3.emit_tag = "transmit";
    c.net.add_reaction(std::move(r3));
  } else {
    chem::Reaction r2;
    r2.id = "r2";
    r2.reactants = {{c.ES, 1}};
    r2.products = {{c.E, 1}};
    r2.k = k2;
    r2.emit_tag = "transmit";
    c.net.add_reaction(std::move(r2));
  }
  c.net.validate();
  return c;
}

namespace {

// Slowest stable eigenvalue of the loop linearized at the half-load steady
// state, ignoring the zero modes that belong to conserved directions.
double slowest_decay_rate(double e0, double k1, double k2, double k_F) {
  CrcNetwork crc = make_crc_network(k1, k2, k_F);
  const Eigen::Index ns = crc.net.species().size();
  Eigen::VectorXd c0 = Eigen::VectorXd::Zero(ns);
  c0(crc.E) = e0;
  FlowModel model = derive_odes(crc.net, {{crc.S, "v_src"}}, &c0);

  Eigen::VectorXd v(1);
  v << 0.5 * e0 * k2;
  const SteadyState ss = steady_state(model, v);
  if (ss.status != SteadyState::Status::Ok)
    throw FlowError("settle time: no finite operating point");

  const Eigen::MatrixXd J = model.jacobian(ss.c, v);
  Eigen::EigenSolver<Eigen::MatrixXd> es(J);
  const double zero_tol = 1e-9 * std::max(1.0, J.cwiseAbs().maxCoeff());
  double slowest = -kInf;
  for (Eigen::Index i = 0; i < J.rows(); ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda) < zero_tol) continue;  // conserved direction
    if (lambda.real() >= 0.0)
      throw FlowError("settle time: linearization is not stable");
    slowest = std::max(slowest, lambda.real());
  }
  if (!std::isfinite(slowest))
    throw FlowError("settle time: no decaying mode found");
  return -slowest;
}

void check_settle_args(double e0, double k1, double k2, double k_F,
                       double tol) {
  if (e0 <= 0.0 || k1 <= 0.0 || k2 <= 0.0 || k_F < 0.0)
    throw FlowError("settle time: rates must be positive (k_F >= 0)");
  if (tol <= 0.0 || tol >= 1.0)
    throw FlowError("settle time: tolerance_fraction must be in (0,1)");
}

}  // namespace

double settle_time_estimate(double e0, double k1, double k2, double k_F,
                            double tolerance_fraction) {
  check_settle_args(e0, k1, k2, k_F, tolerance_fraction);
  if (k_F > 0.0) {
    // The measured output is the F stage: first-order filter, pole -k_F.
    return -std::log(tolerance_fraction) / k_F;
  }
  return -std::log(tolerance_fraction) / slowest_decay_rate(e0, k1, k2, 0.0);
}

double crc_transient_settle_time(double e0, double k1, double k2, double k_F,
                                 double tolerance_fraction) {
  check_settle_args(e0, k1, k2, k_F, tolerance_fraction);
  double rate = slowest_decay_rate(e0, k1, k2, k_F);
  if (k_F > 0.0) rate = std::min(rate, k_F);
  return -std::log(tolerance_fraction) / rate;
}

}  // namespace chemstack::flow
