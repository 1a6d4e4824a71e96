#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "chemstack/chem/grammar.hpp"
#include "chemstack/chem/network.hpp"

namespace chemstack::flow {

struct FlowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// External arrival stream feeding one species, named so steady states can be
// queried for symbolic inflow values ("v_src").
struct InflowSpec {
  chem::SpeciesId species;
  std::string symbol;
};

// Mean-field view of a reaction network:   dc/dt = Psi * v(c).
// Columns of Psi are reactions first, then inflows; rows are species in
// network order. Rate entries keep the mass-action structure (k and the
// reactant exponents) so the ODE system can be printed and differentiated
// symbolically.
class FlowModel {
 public:
  struct RateTerm {
    bool is_inflow = false;
    double k = 0.0;                  // reaction rate constant
    std::string label;               // reaction id or inflow symbol
    std::vector<std::pair<chem::SpeciesId, int>> exponents;  // (species, chi)
  };

  const Eigen::MatrixXd& psi() const { return psi_; }
  const std::vector<RateTerm>& terms() const { return terms_; }
  const std::vector<std::string>& species_names() const { return names_; }
  std::size_t n_species() const { return names_.size(); }
  std::size_t n_reactions() const { return n_reactions_; }
  std::size_t n_inflows() const { return terms_.size() - n_reactions_; }

  // Initial concentrations (conserved totals are read off these).
  const Eigen::VectorXd& c0() const { return c0_; }
  void set_c0(Eigen::VectorXd c0) { c0_ = std::move(c0); }

  Eigen::VectorXd eval_rates(const Eigen::VectorXd& c,
                             const Eigen::VectorXd& inflow_values) const;
  Eigen::VectorXd rhs(const Eigen::VectorXd& c,
                      const Eigen::VectorXd& inflow_values) const;
  // Analytic Jacobian of rhs with respect to c.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& c,
                           const Eigen::VectorXd& inflow_values) const;

  // "k1*c_S*c_E" / "v_src"
  std::string term_string(std::size_t col) const;
  // "dc_S/dt = v_src - k1*c_S*c_E"
  std::string ode_string(std::size_t row) const;

  // Left null-space vectors of Psi with non-negative entries, normalized to
  // smallest integers: each is a conserved weighted sum of concentrations.
  std::vector<Eigen::VectorXd> conserved_sums() const;

  friend FlowModel derive_odes(const chem::ReactionNetwork&,
                               const std::vector<InflowSpec>&,
                               const Eigen::VectorXd*);

 private:
  Eigen::MatrixXd psi_;
  std::vector<RateTerm> terms_;
  std::vector<std::string> names_;
  std::size_t n_reactions_ = 0;
  Eigen::VectorXd c0_;
};

// Build the mean-field model of a network. c0 may be null (defaults to zero).
FlowModel derive_odes(const chem::ReactionNetwork& net,
                      const std::vector<InflowSpec>& inflows,
                      const Eigen::VectorXd* c0 = nullptr);

// Convenience: model plus inflow symbol list straight from a parsed grammar
// file (init counts become c0; inflow order follows the file).
struct ParsedModel {
  FlowModel model;
  std::vector<std::string> inflow_symbols;
};
ParsedModel derive_odes(const chem::ParsedNetwork& parsed);

}  // namespace chemstack::flow
