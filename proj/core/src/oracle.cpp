#include "ehub/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ehub/curves.hpp"

namespace ehub {
namespace {

double horner(const std::vector<double>& c, double x) {
  double y = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) y = y * x + *it;
  return y;
}

void check_domain(double v, double hi) {
  if (!(v >= 0.0) || v > hi * (1 + 1e-12) + 1e-12)
    throw std::domain_error("input " + std::to_string(v) + " outside [0, " + std::to_string(hi) + "]");
}

// Dense tableau over structurals, one slack per row (a_i x - s_i = 0 with
// s_i bounded by the row range) and artificials for rows whose initial
// slack value falls outside its range.
class DenseTableau {
 public:
  DenseTableau(const MilpModel& model, const std::vector<double>& lower, const std::vector<double>& upper)
      : n_(model.variables().size()), m_(model.rows().size()) {
    A_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(n_ + m_));
    for (std::size_t i = 0; i < m_; ++i) {
      for (const auto& [j, v] : model.rows()[i].terms) A_(idx(i), idx(j)) += v;
      A_(idx(i), idx(n_ + i)) = -1.0;
    }
    lo_ = lower;
    hi_ = upper;
    for (const auto& r : model.rows()) {
      lo_.push_back(r.lower);
      hi_.push_back(r.upper);
    }
    cost_.assign(n_ + m_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) cost_[j] = model.variables()[j].cost;
  }

  DenseLpResult solve() {
    DenseLpResult out;
    for (std::size_t j = 0; j < n_ + m_; ++j)
      if (lo_[j] > hi_[j]) return out;
    const std::size_t total = n_ + 2 * m_;
    val_.assign(total, 0.0);
    for (std::size_t j = 0; j < n_; ++j) val_[j] = start_value(j);
    T_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(total));
    T_.leftCols(static_cast<Eigen::Index>(n_ + m_)) = A_;
    head_.assign(m_, 0);
    basic_.assign(total, 0);
    std::vector<double> phase1(total, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      double act = 0;
      for (std::size_t j = 0; j < n_; ++j) act += A_(idx(i), idx(j)) * val_[j];
      const std::size_t s = n_ + i, a = n_ + m_ + i;
      lo_.resize(total, 0.0);
      hi_.resize(total, kInf);
      if (act >= lo_[s] && act <= hi_[s]) {
        val_[s] = act;
        set_basic(i, s);
      } else {
        val_[s] = act < lo_[s] ? lo_[s] : hi_[s];
        const double resid = act - val_[s];  // a_i x - s_i
        const double sigma = resid > 0 ? -1.0 : 1.0;
        T_(idx(i), idx(a)) = sigma;
        val_[a] = std::abs(resid);
        phase1[a] = 1.0;
        set_basic(i, a);
      }
    }
    if (!iterate(phase1)) return out;  // phase 1 is bounded below by zero
    double infeas = 0;
    for (std::size_t a = n_ + m_; a < total; ++a) infeas += val_[a];
    if (infeas > 1e-7 * (1.0 + scale())) return out;
    for (std::size_t a = n_ + m_; a < total; ++a) hi_[a] = 0.0;
    std::vector<double> phase2(total, 0.0);
    std::copy(cost_.begin(), cost_.end(), phase2.begin());
    if (!iterate(phase2)) {
      out.unbounded = true;
      return out;
    }
    refine();
    out.feasible = true;
    out.x.assign(val_.begin(), val_.begin() + static_cast<std::ptrdiff_t>(n_));
    for (std::size_t j = 0; j < n_; ++j) out.objective += cost_[j] * out.x[j];
    return out;
  }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

  double start_value(std::size_t j) const {
    if (std::isfinite(lo_[j])) return lo_[j];
    if (std::isfinite(hi_[j])) return hi_[j];
    return 0.0;
  }

  double scale() const {
    double s = 0;
    for (double v : val_) s = std::max(s, std::abs(v));
    return s;
  }

  void set_basic(std::size_t row, std::size_t var) {
    const double piv = T_(idx(row), idx(var));
    T_.row(idx(row)) /= piv;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = T_(idx(i), idx(var));
      if (f != 0.0) T_.row(idx(i)) -= f * T_.row(idx(row));
    }
    if (basic_[head_[row]] && head_[row] != var) basic_[head_[row]] = 0;
    head_[row] = var;
    basic_[var] = 1;
  }

  // Bland's rule on the bounded-variable tableau. Returns false if unbounded.
  bool iterate(const std::vector<double>& c) {
    constexpr double tol = 1e-9;
    const std::size_t total = val_.size();
    for (long iter = 0; iter < 1000000; ++iter) {
      std::size_t enter = total;
      double dir = 0;
      for (std::size_t j = 0; j < total && enter == total; ++j) {
        if (basic_[j] || hi_[j] - lo_[j] <= 0.0) continue;
        double d = c[j];
        for (std::size_t i = 0; i < m_; ++i) d -= c[head_[i]] * T_(idx(i), idx(j));
        if (d < -tol && val_[j] < hi_[j] - tol) enter = j, dir = 1.0;
        else if (d > tol && val_[j] > lo_[j] + tol) enter = j, dir = -1.0;
      }
      if (enter == total) return true;

      double theta = hi_[enter] - lo_[enter];
      std::size_t leave_row = m_;
      for (std::size_t i = 0; i < m_; ++i) {
        const double t = T_(idx(i), idx(enter));
        if (std::abs(t) <= 1e-11) continue;
        const std::size_t b = head_[i];
        const double delta = -dir * t;
        const double room = delta < 0 ? (val_[b] - lo_[b]) / -delta : (hi_[b] - val_[b]) / delta;
        const double r = std::max(0.0, room);
        if (r < theta || (r == theta && leave_row < m_ && b < head_[leave_row])) {
          theta = r;
          leave_row = i;
        }
      }
      if (!std::isfinite(theta)) return false;
      val_[enter] += dir * theta;
      for (std::size_t i = 0; i < m_; ++i) val_[head_[i]] += -dir * T_(idx(i), idx(enter)) * theta;
      if (leave_row == m_) continue;
      const std::size_t b = head_[leave_row];
      const double delta = -dir * T_(idx(leave_row), idx(enter));
      val_[b] = delta < 0 ? lo_[b] : hi_[b];
      set_basic(leave_row, enter);
    }
    throw std::runtime_error("dense simplex did not terminate");
  }

  // Recomputes basic values from the nonbasic ones on the original columns.
  void refine() {
    if (m_ == 0) return;
    Eigen::MatrixXd B(idx(m_), idx(m_));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(idx(m_));
    const std::size_t total = val_.size();
    auto column = [&](std::size_t j) -> Eigen::VectorXd {
      if (j < n_ + m_) return A_.col(idx(j));
      Eigen::VectorXd e = Eigen::VectorXd::Zero(idx(m_));
      e(idx(j - n_ - m_)) = 1.0;  // artificials are pinned at zero here
      return e;
    };
    for (std::size_t i = 0; i < m_; ++i) B.col(idx(i)) = column(head_[i]);
    for (std::size_t j = 0; j < total; ++j)
      if (!basic_[j] && val_[j] != 0.0 && j < n_ + m_) rhs -= A_.col(idx(j)) * val_[j];
    const Eigen::VectorXd xb = B.fullPivLu().solve(rhs);
    for (std::size_t i = 0; i < m_; ++i) val_[head_[i]] = xb(idx(i));
  }

  std::size_t n_, m_;
  Eigen::MatrixXd A_;
  Eigen::MatrixXd T_;
  std::vector<double> lo_, hi_, cost_, val_;
  std::vector<std::size_t> head_;
  std::vector<char> basic_;
};

}  // namespace

double eval_true_curve(const ComponentSpec& spec, double v_in, const std::string& port) {
  if (const auto* c = std::get_if<ConstantEfficiency>(&spec.model)) {
    if (spec.capacity.input) check_domain(v_in, *spec.capacity.input);
    for (const auto& [name, eta] : c->outputs)
      if (name == port) return eta * v_in;
  } else if (const auto* poly = std::get_if<PolynomialCurves>(&spec.model)) {
    if (const auto range = polynomial_input_range(*poly, spec.capacity)) check_domain(v_in, *range);
    for (const auto& [name, f] : poly->outputs)
      if (name == port) return horner(f.coefficients(), v_in);
  } else {
    throw std::invalid_argument("eval_true_curve needs a single-input converter spec");
  }
  throw std::invalid_argument("no output port '" + port + "'");
}

double eval_true_storage(const StorageCurves& spec, double power, bool charging) {
  check_domain(power, spec.power_capacity);
  if (charging) return power * (spec.charge.intercept + spec.charge.slope * power);
  return power == 0.0 ? 0.0 : power / (spec.discharge.intercept + spec.discharge.slope * power);
}

double eval_true_curve(const BivariateQuadratic& q, double p, double q_value) {
  check_domain(p, q.p_max);
  check_domain(q_value, q.q_max);
  return q.a * p * p + q.b * q_value * q_value + q.c * p * q_value + q.d * p + q.e * q_value + q.f;
}

double true_curve_value(const LinearizedComponent& lc, const LinearizedCurve& curve, double x) {
  const ComponentSpec& spec = lc.spec;
  switch (curve.kind) {
    case CurveKind::conversion: {
      const std::string& port = lc.port_names.at(*curve.value_port);
      return eval_true_curve(spec, x, port) - eval_true_curve(spec, 0.0, port);
    }
    case CurveKind::mapped_p:
    case CurveKind::mapped_q: {
      const auto& q = std::get<BivariateQuadratic>(spec.model);
      const auto& d = *lc.mapping;
      auto G = [&](double pr, double qr) {
        const double p = d.swapped ? qr : pr, qq = d.swapped ? pr : qr;
        return q.a * p * p + q.b * qq * qq + q.c * p * qq + q.d * p + q.e * qq + q.f;
      };
      if (curve.kind == CurveKind::mapped_p) return G(x, 0.0) - G(0.0, 0.0);
      return G(-d.kappa * x, x) - G(0.0, 0.0);
    }
    case CurveKind::charge:
      return eval_true_storage(std::get<StorageCurves>(spec.model), x, true);
    case CurveKind::discharge:
      return eval_true_storage(std::get<StorageCurves>(spec.model), x, false);
  }
  return 0.0;
}

ErrorReport approximation_error(const LinearizedComponent& lc, int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("error grid needs at least two points");
  ErrorReport report;
  for (const auto& curve : lc.curves) {
    CurveError e;
    e.component = lc.node_id;
    const std::size_t port = curve.value_port.value_or(curve.argument_port);
    e.curve = std::string(to_string(curve.kind)) + ":" + lc.port_names.at(port);
    const double range = curve.domain.range();
    double sum = 0;
    for (int i = 0; i < grid_points; ++i) {
      const double x = i == grid_points - 1 ? range : range * i / (grid_points - 1);
      const double err = std::abs(pwl_eval(curve, x) - true_curve_value(lc, curve, x));
      e.max_abs = std::max(e.max_abs, err);
      sum += err;
    }
    e.mean_abs = sum / grid_points;
    report.curves.push_back(std::move(e));
  }
  return report;
}

double reference_dispatch(const HubTopology& hub, const SeriesData& series, std::size_t periods,
                          const DispatchOptions& options, int segments) {
  LinearizeOptions lo;
  lo.segments = segments;
  const DispatchProblem problem = build_dispatch_problem(linearize_hub(hub, lo), series, periods, options);
  SolveOptions so;
  so.relative_gap = 1e-6;
  const DispatchSolution sol = solve(problem, so);
  if (sol.status != SolveStatus::optimal)
    throw std::runtime_error("reference dispatch ended with status " + std::string(to_string(sol.status)));
  return sol.objective;
}

DenseLpResult dense_simplex(const MilpModel& model) {
  std::vector<double> lower, upper;
  for (const auto& v : model.variables()) {
    lower.push_back(v.lower);
    upper.push_back(v.upper);
  }
  return DenseTableau(model, lower, upper).solve();
}

EnumerationResult brute_force_milp(const MilpModel& model) {
  std::vector<std::size_t> ints;
  std::vector<double> lower, upper;
  for (std::size_t j = 0; j < model.variables().size(); ++j) {
    const auto& v = model.variables()[j];
    lower.push_back(v.lower);
    upper.push_back(v.upper);
    if (!v.integer) continue;
    if (v.lower < 0.0 || v.upper > 1.0) throw std::invalid_argument("enumeration supports binary variables only");
    ints.push_back(j);
  }
  if (ints.size() > 20) throw std::invalid_argument("too many binaries to enumerate: " + std::to_string(ints.size()));

  EnumerationResult best;
  const std::uint64_t count = std::uint64_t{1} << ints.size();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    bool possible = true;
    for (std::size_t b = 0; b < ints.size(); ++b) {
      const double v = (mask >> (ints.size() - 1 - b)) & 1U ? 1.0 : 0.0;
      const auto& var = model.variables()[ints[b]];
      if (v < var.lower || v > var.upper) possible = false;
      lower[ints[b]] = upper[ints[b]] = v;
    }
    if (!possible) continue;
    const DenseLpResult lp = DenseTableau(model, lower, upper).solve();
    ++best.lps_solved;
    if (lp.unbounded) throw std::runtime_error("enumerated LP is unbounded");
    if (!lp.feasible) continue;
    if (!best.feasible || lp.objective < best.objective - 1e-9 * std::max(1.0, std::abs(best.objective))) {
      best.feasible = true;
      best.objective = lp.objective;
      best.values = lp.x;
    }
  }
  return best;
}

MilpModel constant_dispatch_lp(const HubTopology& hub, const SeriesData& series, std::size_t periods,
                               double dt_hours) {
  MilpModel m;
  for (const auto& node : hub.nodes) {
    if (node.kind == NodeKind::storage) throw std::invalid_argument("storage is not supported by the constant LP");
    if (node.spec && !std::holds_alternative<ConstantEfficiency>(node.spec->model))
      throw std::invalid_argument("node '" + node.id + "' is not constant-efficiency");
  }
  for (std::size_t t = 0; t < periods; ++t) {
    const std::string tag = "_" + std::to_string(t + 1);
    std::vector<std::size_t> flow;
    for (const auto& b : hub.branches) {
      const bool exporting = b.from.kind == Endpoint::Kind::hub_input && hub.inputs[b.from.terminal].allow_export;
      flow.push_back(m.add_variable("v_" + b.id + tag, exporting ? -kInf : 0.0, kInf));
    }
    std::vector<std::size_t> bought;
    for (std::size_t i = 0; i < hub.inputs.size(); ++i)
      bought.push_back(m.add_variable("buy_" + hub.inputs[i].name + tag, hub.inputs[i].allow_export ? -kInf : 0.0,
                                      kInf, series.prices[i][t] * dt_hours / 1000.0));

    auto port_sum = [&](std::size_t n, std::size_t p, double scale, std::vector<std::pair<std::size_t, double>>& terms) {
      for (std::size_t b = 0; b < hub.branches.size(); ++b)
        for (const auto& e : {hub.branches[b].from, hub.branches[b].to})
          if (e.kind == Endpoint::Kind::node_port && e.node == n && e.port == p) terms.emplace_back(flow[b], scale);
    };
    for (std::size_t n = 0; n < hub.nodes.size(); ++n) {
      const Node& node = hub.nodes[n];
      if (node.spec) {
        const auto& eff = std::get<ConstantEfficiency>(node.spec->model);
        for (const auto& [name, eta] : eff.outputs) {
          std::vector<std::pair<std::size_t, double>> terms;
          for (std::size_t p = 0; p < node.ports.size(); ++p) {
            if (node.ports[p].direction == PortDirection::input) port_sum(n, p, eta, terms);
            else if (node.ports[p].name == name) port_sum(n, p, -1.0, terms);
          }
          m.add_row(node.id + "_" + name + tag, 0.0, 0.0, std::move(terms));
        }
        for (std::size_t p = 0; p < node.ports.size(); ++p) {
          std::optional<double> cap;
          if (node.ports[p].direction == PortDirection::input) {
            cap = node.spec->capacity.input;
          } else if (auto it = node.spec->capacity.outputs.find(node.ports[p].name);
                     it != node.spec->capacity.outputs.end()) {
            cap = it->second;
          }
          if (!cap) continue;
          std::vector<std::pair<std::size_t, double>> terms;
          port_sum(n, p, 1.0, terms);
          m.add_row(node.id + "_cap_" + node.ports[p].name + tag, -kInf, *cap, std::move(terms));
        }
      } else {
        std::vector<std::pair<std::size_t, double>> terms;
        for (std::size_t p = 0; p < node.ports.size(); ++p)
          port_sum(n, p, node.ports[p].direction == PortDirection::input ? 1.0 : -1.0, terms);
        m.add_row(node.id + "_balance" + tag, 0.0, 0.0, std::move(terms));
      }
    }
    for (std::size_t i = 0; i < hub.inputs.size(); ++i) {
      std::vector<std::pair<std::size_t, double>> terms{{bought[i], -1.0}};
      for (std::size_t b = 0; b < hub.branches.size(); ++b)
        if (hub.branches[b].from.kind == Endpoint::Kind::hub_input && hub.branches[b].from.terminal == i)
          terms.emplace_back(flow[b], 1.0);
      m.add_row("input_" + hub.inputs[i].name + tag, 0.0, 0.0, std::move(terms));
    }
    for (std::size_t j = 0; j < hub.outputs.size(); ++j) {
      std::vector<std::pair<std::size_t, double>> terms;
      for (std::size_t b = 0; b < hub.branches.size(); ++b)
        if (hub.branches[b].to.kind == Endpoint::Kind::hub_output && hub.branches[b].to.terminal == j)
          terms.emplace_back(flow[b], 1.0);
      const double d = series.demands[j][t];
      m.add_row("output_" + hub.outputs[j].name + tag, d, d, std::move(terms));
    }
  }
  return m;
}

}  // namespace ehub
