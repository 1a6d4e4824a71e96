#pragma once

#include <optional>

#include "chemstack/flow/model.hpp"

namespace chemstack::flow {

// --- numerical integration ------------------------------------------------

struct ClampEvent {
  double t;
  chem::SpeciesId species;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<ClampEvent> clamps;

  const Eigen::VectorXd& back() const { return states.back(); }
  // Linear interpolation at time t.
  Eigen::VectorXd at(double t) const;
};

// Classic fixed-step RK4. Concentrations are clamped at zero; every clamp is
// recorded (repeated clamping signals a stiffness/step-size problem to the
// caller, it is not silently absorbed).
Trajectory integrate(const FlowModel& model, const Eigen::VectorXd& c0,
                     const Eigen::VectorXd& inflow_values, double t_end,
                     double dt, int record_every = 1);

// --- steady state ---------------------------------------------------------

struct SteadyState {
  enum class Status { Ok, Unbounded };
  Status status = Status::Ok;
  Eigen::VectorXd c;                           // valid when Ok
  std::vector<std::string> unbounded_species;  // valid when Unbounded
  int newton_iterations = 0;
  double residual = 0.0;
};

// Solve Psi*v(c) = 0 subject to the conserved sums implied by model.c0(),
// by damped Newton from a feasible start. Before solving, a capacity screen
// propagates throughput bounds through conserved token pools; an inflow that
// exceeds the total service capacity of its species makes the queue grow
// without bound, which is reported as Unbounded instead of a solution.
SteadyState steady_state(const FlowModel& model,
                         const Eigen::VectorXd& inflow_values);

// Throughput capacity of each reaction given the conserved pools (the screen
// described above); exposed for inspection/testing. Infinity = uncapped.
Eigen::VectorXd reaction_capacities(const FlowModel& model);

// --- closed forms for the CRC loop ---------------------------------------

// Saturation law of the two-stage token loop:
//   v_out = e0*k2 * c_S / ((k2/k1) + c_S)
double michaelis_menten_rate(double c_S, double e0, double k1, double k2);

// Time for the observed output to come within `tolerance_fraction` of its
// final value after a step change.
// With the low-pass stage enabled (k_F > 0) the measured output is the F
// stage, a first-order filter with pole -k_F: the estimate is
// -ln(tol)/k_F. With the stage disabled the estimate comes from the slowest
// stable eigenvalue of the loop Jacobian at the half-load operating point.
// Throws FlowError if the linearization is not stable.
double settle_time_estimate(double e0, double k1, double k2, double k_F,
                            double tolerance_fraction);

// Conservative settle bound for a running CRC: slowest time constant among
// the token-loop linearization and the low-pass stage (trial harnesses use
// this to place their measurement window after the full transient).
double crc_transient_settle_time(double e0, double k1, double k2, double k_F,
                                 double tolerance_fraction);

// The CRC reaction network itself (S + E -> ES -> emission, with the optional
// F stage when k_F > 0). Shared by flow-level analyses and tests.
struct CrcNetwork {
  chem::ReactionNetwork net;
  chem::SpeciesId S, E, ES;
  std::optional<chem::SpeciesId> F;
};
CrcNetwork make_crc_network(double k1, double k2, double k_F);

}  // namespace chemstack::flow
