#include "chemstack/flow/model.hpp"

#include <cmath>
#include <sstream>

namespace chemstack::flow {

FlowModel derive_odes(const chem::ReactionNetwork& net,
                      const std::vector<InflowSpec>& inflows,
                      const Eigen::VectorXd* c0) {
  net.validate();
  FlowModel m;
  const auto& species = net.species();
  const auto& reactions = net.reactions();
  const std::size_t n = species.size();

  for (const auto& s : species) m.names_.push_back(s.name);
  m.n_reactions_ = reactions.size();
  m.psi_ = Eigen::MatrixXd::Zero(n, reactions.size() + inflows.size());

  for (std::size_t j = 0; j < reactions.size(); ++j) {
    const auto& r = reactions[j];
    FlowModel::RateTerm term;
    term.k = r.k;
    term.label = r.id;
    for (auto& [s, chi] : r.reactants) {
      m.psi_(s, j) -= chi;
      term.exponents.push_back({s, chi});
    }
    for (auto& [s, xi] : r.products) m.psi_(s, j) += xi;
    m.terms_.push_back(std::move(term));
  }
  for (std::size_t j = 0; j < inflows.size(); ++j) {
    FlowModel::RateTerm term;
    term.is_inflow = true;
    term.label = inflows[j].symbol;
    m.psi_(inflows[j].species, reactions.size() + j) += 1.0;
    m.terms_.push_back(std::move(term));
  }

  m.c0_ = c0 ? *c0 : Eigen::VectorXd::Zero(n);
  if (m.c0_.size() != static_cast<Eigen::Index>(n))
    throw FlowError("c0 dimension mismatch");
  return m;
}

ParsedModel derive_odes(const chem::ParsedNetwork& parsed) {
  ParsedModel out;
  std::vector<InflowSpec> inflows;
  for (const auto& [species, symbol] : parsed.inflows) {
    const std::string name = symbol.empty() ? "v_" + species : symbol;
    inflows.push_back({parsed.network.species_id(species), name});
    out.inflow_symbols.push_back(name);
  }
  Eigen::VectorXd c0 = Eigen::VectorXd::Zero(parsed.network.species().size());
  for (auto& [name, cnt] : parsed.initial_counts)
    c0(parsed.network.species_id(name)) = static_cast<double>(cnt);
  out.model = derive_odes(parsed.network, inflows, &c0);
  return out;
}

Eigen::VectorXd FlowModel::eval_rates(const Eigen::VectorXd& c,
                                      const Eigen::VectorXd& inflow) const {
  if (inflow.size() != static_cast<Eigen::Index>(n_inflows()))
    throw FlowError("inflow value count mismatch");
  Eigen::VectorXd v(terms_.size());
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    const auto& t = terms_[j];
    if (t.is_inflow) {
      v(j) = inflow(j - n_reactions_);
    } else {
      double r = t.k;
      for (auto& [s, chi] : t.exponents)
        for (int i = 0; i < chi; ++i) r *= c(s);
      v(j) = r;
    }
  }
  return v;
}

Eigen::VectorXd FlowModel::rhs(const Eigen::VectorXd& c,
                               const Eigen::VectorXd& inflow) const {
  return psi_ * eval_rates(c, inflow);
}

Eigen::MatrixXd FlowModel::jacobian(const Eigen::VectorXd& c,
                                    const Eigen::VectorXd& inflow) const {
  (void)inflow;
  // d(Psi v)/dc = Psi * dv/dc, with
  // dv_j/dc_s = k * chi_s * c_s^(chi_s - 1) * prod_{o != s} c_o^chi_o.
  Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(terms_.size(), c.size());
  for (std::size_t j = 0; j < n_reactions_; ++j) {
    const auto& t = terms_[j];
    for (auto& [s, chi] : t.exponents) {
      double d = t.k * chi;
      for (int i = 0; i < chi - 1; ++i) d *= c(s);
      for (auto& [o, chi_o] : t.exponents) {
        if (o == s) continue;
        for (int i = 0; i < chi_o; ++i) d *= c(o);
      }
      dv(j, s) += d;
    }
  }
  return psi_ * dv;
}

std::string FlowModel::term_string(std::size_t col) const {
  const auto& t = terms_.at(col);
  if (t.is_inflow) return t.label;
  std::ostringstream os;
  os << t.label << ":";
  bool first = true;
  auto emit = [&](const std::string& factor) {
    os << (first ? " " : "*") << factor;
    first = false;
  };
  {
    std::ostringstream k;
    k << t.k;
    emit("k=" + k.str());
  }
  for (auto& [s, chi] : t.exponents) {
    std::string f = "c_" + names_[s];
    if (chi > 1) f += "^" + std::to_string(chi);
    emit(f);
  }
  return os.str();
}

std::string FlowModel::ode_string(std::size_t row) const {
  std::ostringstream os;
  os << "dc_" << names_.at(row) << "/dt =";
  bool any = false;
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    const double w = psi_(row, j);
    if (w == 0.0) continue;
    std::string term;
    if (terms_[j].is_inflow) {
      term = terms_[j].label;
    } else {
      std::ostringstream ts;
      ts << terms_[j].k;
      term = ts.str();
      for (auto& [s, chi] : terms_[j].exponents) {
        term += "*c_" + names_[s];
        if (chi > 1) term += "^" + std::to_string(chi);
      }
    }
    const double aw = std::abs(w);
    os << (w < 0 ? " - " : (any ? " + " : " "));
    if (aw != 1.0) os << aw << "*";
    os << term;
    any = true;
  }
  if (!any) os << " 0";
  return os.str();
}

std::vector<Eigen::VectorXd> FlowModel::conserved_sums() const {
  // Left null space of Psi = kernel of Psi^T.
  Eigen::FullPivLU<Eigen::MatrixXd> lu(psi_.transpose());
  lu.setThreshold(1e-10);
  const Eigen::MatrixXd kernel = lu.kernel();
  std::vector<Eigen::VectorXd> out;
  if (lu.dimensionOfKernel() == 0) return out;

  for (Eigen::Index j = 0; j < kernel.cols(); ++j) {
    Eigen::VectorXd w = kernel.col(j);
    // Normalize to the smallest integer pattern when entries are rational
    // multiples of each other (they are, for stoichiometric kernels).
    double min_abs = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (std::abs(w(i)) > 1e-9 &&
          (min_abs == 0.0 || std::abs(w(i)) < min_abs))
        min_abs = std::abs(w(i));
    if (min_abs == 0.0) continue;
    w /= min_abs;
    // Flip so the dominant sign is positive.
    if (w.sum() < 0.0) w = -w;
    bool integral = true, nonneg = true;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (std::abs(w(i) - std::round(w(i))) > 1e-6) integral = false;
      if (w(i) < -1e-9) nonneg = false;
    }
    if (integral) w = w.array().round().matrix();
    if (nonneg) out.push_back(w);
  }
  return out;
}

}  // namespace chemstack::flow
