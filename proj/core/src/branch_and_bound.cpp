// Branch-and-bound over the fill-order binaries.
//
// The LP relaxations are solved on an equivalent reduced model: every group of
// loading-ordered secondaries v_1..v_s is written as v_k = w_k * sum_{j>=k} psi_j
// with psi >= 0 and sum psi <= 1, secondaries fixed by characteristic rows are
// substituted out, and the binaries disappear. The relaxation of the
// fill-order rows is exactly this monotone-staircase polytope, so the bounds
// match the full model's. Fixing u_k = 1 forces psi_j = 0 for j < k with
// sum psi = 1; fixing u_k = 0 forces psi_j = 0 for j > k.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <queue>
#include <stdexcept>

#include "ehub/dispatch.hpp"

namespace ehub {
namespace {

using Terms = std::vector<std::pair<std::size_t, double>>;

struct CompactGroup {
  std::size_t psi_begin = 0;
  std::size_t segments = 0;
  std::size_t convexity_row = 0;
  std::vector<double> breakpoints;
  std::vector<std::size_t> binaries;  // full-model u_1..u_{s-1}
};

struct CompactModel {
  LpProblem lp;
  std::vector<CompactGroup> groups;
  std::vector<std::size_t> plain;       // compact index of each remaining binary
  std::vector<std::size_t> plain_full;  // its full-model index
  std::vector<Terms> expr;              // full variable -> compact terms
};

CompactModel build_compact(const DispatchProblem& p) {
  const auto& full = p.model;
  const std::size_t nfull = full.variables().size();
  CompactModel cm;
  cm.expr.resize(nfull);
  std::vector<char> defined(nfull, 0), group_binary(nfull, 0), skip_row(full.rows().size(), 0);
  std::vector<double> cost, lower, upper;
  auto new_var = [&](double lo, double hi) {
    lower.push_back(lo);
    upper.push_back(hi);
    cost.push_back(0.0);
    return lower.size() - 1;
  };

  for (const auto& g : p.groups) {
    CompactGroup cg;
    cg.segments = g.flows.size();
    cg.psi_begin = lower.size();
    cg.binaries = g.binaries;
    cg.breakpoints.push_back(0.0);
    for (double w : g.widths) cg.breakpoints.push_back(cg.breakpoints.back() + w);
    for (std::size_t j = 0; j < cg.segments; ++j) new_var(0.0, 1.0);
    for (std::size_t k = 0; k < cg.segments; ++k) {
      for (std::size_t j = k; j < cg.segments; ++j) cm.expr[g.flows[k]].emplace_back(cg.psi_begin + j, g.widths[k]);
      defined[g.flows[k]] = 1;
    }
    for (std::size_t u : g.binaries) group_binary[u] = 1;
    cm.groups.push_back(std::move(cg));
  }

  const auto x_rows = static_cast<std::size_t>(p.system.X.rows());
  const auto y_rows = static_cast<std::size_t>(p.system.Y.rows());
  for (std::size_t t = 0; t < p.periods; ++t) {
    const auto& pr = p.period_rows[t];
    for (std::size_t i = pr.continuity_begin; i < pr.continuity_end; ++i) skip_row[i] = 1;
    for (std::size_t r = 0; r < p.system.z_rows.size(); ++r) {
      const auto& zr = p.system.z_rows[r];
      if (!zr.dependent) continue;
      const std::size_t row = pr.flow_begin + x_rows + y_rows + r;
      const std::size_t dep = p.flow_vars[t][*zr.dependent];
      double c_dep = 0;
      for (const auto& [j, v] : full.rows()[row].terms)
        if (j == dep) c_dep += v;
      std::map<std::size_t, double> acc;
      for (const auto& [j, v] : full.rows()[row].terms) {
        if (j == dep) continue;
        if (!defined[j]) throw std::logic_error("characteristic row refers to an unexpressed variable");
        for (const auto& [k, c] : cm.expr[j]) acc[k] += -v / c_dep * c;
      }
      cm.expr[dep].assign(acc.begin(), acc.end());
      defined[dep] = 1;
      skip_row[row] = 1;
    }
  }

  for (std::size_t j = 0; j < nfull; ++j) {
    if (defined[j] || group_binary[j]) continue;
    const auto& v = full.variables()[j];
    const std::size_t k = new_var(v.lower, v.upper);
    cm.expr[j] = {{k, 1.0}};
    defined[j] = 1;
    if (v.integer) {
      cm.plain.push_back(k);
      cm.plain_full.push_back(j);
    }
  }
  for (std::size_t j = 0; j < nfull; ++j) {
    const double c = full.variables()[j].cost;
    if (c == 0.0) continue;
    for (const auto& [k, a] : cm.expr[j]) cost[k] += c * a;
  }

  std::vector<Eigen::Triplet<double>> trips;
  std::size_t nrows = 0;
  for (std::size_t i = 0; i < full.rows().size(); ++i) {
    if (skip_row[i]) continue;
    const auto& r = full.rows()[i];
    std::map<std::size_t, double> acc;
    for (const auto& [j, v] : r.terms) {
      if (group_binary[j]) throw std::logic_error("binary outside a fill-order row");
      for (const auto& [k, c] : cm.expr[j]) acc[k] += v * c;
    }
    for (const auto& [k, v] : acc)
      if (v != 0.0) trips.emplace_back(static_cast<int>(nrows), static_cast<int>(k), v);
    cm.lp.row_lower.push_back(r.lower);
    cm.lp.row_upper.push_back(r.upper);
    ++nrows;
  }
  for (auto& g : cm.groups) {
    for (std::size_t j = 0; j < g.segments; ++j)
      trips.emplace_back(static_cast<int>(nrows), static_cast<int>(g.psi_begin + j), 1.0);
    g.convexity_row = nrows++;
    cm.lp.row_lower.push_back(0.0);
    cm.lp.row_upper.push_back(1.0);
  }
  auto A = std::make_shared<Eigen::SparseMatrix<double>>(static_cast<Eigen::Index>(nrows),
                                                          static_cast<Eigen::Index>(lower.size()));
  A->setFromTriplets(trips.begin(), trips.end());
  A->makeCompressed();
  cm.lp.matrix = std::move(A);
  cm.lp.cost = std::move(cost);
  cm.lp.col_lower = std::move(lower);
  cm.lp.col_upper = std::move(upper);
  return cm;
}

// Allowed psi support [L, R] per group (L = 0: the origin is allowed), and a
// fixing per remaining binary (-1 free).
struct NodeState {
  std::vector<int> lo;
  std::vector<int> hi;
  std::vector<signed char> fixed;
};

struct BranchChoice {
  bool found = false;
  bool group = false;
  std::size_t index = 0;  // group or plain binary
  int k = 0;              // u_k for groups
};

struct Node {
  double bound = 0;
  long id = 0;
  NodeState state;
  Basis basis;
  BranchChoice branch;
};

struct NodeOrder {
  bool operator()(const std::unique_ptr<Node>& a, const std::unique_ptr<Node>& b) const {
    if (a->bound != b->bound) return a->bound > b->bound;
    return a->id > b->id;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const DispatchProblem& p, const SolveOptions& o) : p_(p), opt_(o), cm_(build_compact(p)) {}

  DispatchSolution run() {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    DispatchSolution sol;

    NodeState root_state;
    for (const auto& g : cm_.groups) {
      root_state.lo.push_back(0);
      root_state.hi.push_back(static_cast<int>(g.segments));
    }
    root_state.fixed.assign(cm_.plain.size(), -1);

    std::priority_queue<std::unique_ptr<Node>, std::vector<std::unique_ptr<Node>>, NodeOrder> open;
    double root_objective = 0;
    bool root_feasible = false;
    if (auto root = evaluate(root_state, nullptr, &root_objective, &root_feasible)) open.push(std::move(root));
    sol.root_bound = root_objective;

    SolveStatus stop = SolveStatus::optimal;
    while (!open.empty()) {
      if (open.top()->bound >= cutoff()) break;
      if (opt_.time_limit_seconds && elapsed() > *opt_.time_limit_seconds) {
        stop = SolveStatus::time_limit;
        break;
      }
      if (opt_.node_limit && nodes_ >= *opt_.node_limit) {
        stop = SolveStatus::gap_limit;
        break;
      }
      std::unique_ptr<Node> node = std::move(const_cast<std::unique_ptr<Node>&>(open.top()));
      open.pop();
      ++nodes_;
      for (int side = 0; side < 2; ++side) {
        NodeState child = node->state;
        if (!apply_branch(child, node->branch, side)) continue;
        if (auto c = evaluate(child, &node->basis, nullptr, nullptr)) open.push(std::move(c));
      }
    }

    sol.nodes = nodes_;
    sol.lp_iterations = iterations_;
    sol.seconds = elapsed();
    if (!root_feasible || incumbent_.empty()) {
      sol.status = stop == SolveStatus::optimal ? SolveStatus::infeasible : stop;
      sol.objective = kInf;
      sol.bound = open.empty() ? kInf : open.top()->bound;
      return sol;
    }
    sol.objective = incumbent_value_;
    sol.bound = open.empty() ? incumbent_value_ : std::min(incumbent_value_, open.top()->bound);
    sol.gap = (sol.objective - sol.bound) / std::max(std::abs(sol.objective), 1e-10);
    if (sol.gap < 0) sol.gap = 0;
    sol.status = stop;
    sol.values = expand(incumbent_);
    sol.objective = p_.model.objective(sol.values);
    return sol;
  }

 private:
  double cutoff() const {
    if (incumbent_.empty()) return kInf;
    return incumbent_value_ - std::max(1e-9, opt_.relative_gap * std::abs(incumbent_value_));
  }

  LpProblem lp_for(const NodeState& st) const {
    LpProblem lp = cm_.lp;
    for (std::size_t g = 0; g < cm_.groups.size(); ++g) {
      const auto& cg = cm_.groups[g];
      for (std::size_t j = 0; j < cg.segments; ++j) {
        const int seg = static_cast<int>(j) + 1;
        if (seg < st.lo[g] || seg > st.hi[g]) lp.col_upper[cg.psi_begin + j] = 0.0;
      }
      if (st.lo[g] >= 1) lp.row_lower[cg.convexity_row] = 1.0;
    }
    for (std::size_t b = 0; b < cm_.plain.size(); ++b)
      if (st.fixed[b] >= 0) lp.col_lower[cm_.plain[b]] = lp.col_upper[cm_.plain[b]] = st.fixed[b];
    return lp;
  }

  LpResult solve_node(const NodeState& st, const Basis* warm) {
    LpResult res = solve_lp(lp_for(st), {}, warm);
    iterations_ += res.iterations;
    if (res.status == LpStatus::unbounded) throw std::runtime_error("dispatch relaxation is unbounded");
    if (res.status == LpStatus::iteration_limit) throw std::runtime_error("LP iteration limit reached");
    return res;
  }

  // Staircase depths delta_k = sum_{j>=k} psi_j, k = 1..s+1.
  std::vector<double> depths(const CompactGroup& g, const std::vector<double>& x) const {
    std::vector<double> d(g.segments + 2, 0.0);
    for (std::size_t k = g.segments; k >= 1; --k) d[k] = d[k + 1] + x[g.psi_begin + k - 1];
    return d;
  }

  BranchChoice choose(const std::vector<double>& x) const {
    const double tol = opt_.integrality_tol;
    BranchChoice best;
    double best_frac = 0;
    std::size_t best_var = 0;
    auto consider = [&](double frac, std::size_t full_var, BranchChoice c) {
      if (frac <= tol) return;
      const bool better = !best.found || frac > best_frac + 1e-12 ||
                          (std::abs(frac - best_frac) <= 1e-12 && full_var < best_var);
      if (!better) return;
      best = c;
      best.found = true;
      best_frac = frac;
      best_var = full_var;
    };
    for (std::size_t g = 0; g < cm_.groups.size(); ++g) {
      const auto& cg = cm_.groups[g];
      if (cg.segments < 2) continue;
      const auto d = depths(cg, x);
      for (std::size_t k = 1; k < cg.segments; ++k) {
        if (d[k + 1] <= tol || d[k] >= 1.0 - tol) continue;
        consider(std::min(d[k + 1], 1.0 - d[k]), cg.binaries[k - 1], {true, true, g, static_cast<int>(k)});
      }
    }
    for (std::size_t b = 0; b < cm_.plain.size(); ++b) {
      const double v = x[cm_.plain[b]];
      consider(std::min(v, 1.0 - v), cm_.plain_full[b], {true, false, b, 0});
    }
    return best;
  }

  static bool apply_branch(NodeState& st, const BranchChoice& b, int side) {
    if (!b.group) {
      st.fixed[b.index] = static_cast<signed char>(side);
      return true;
    }
    if (side == 0) st.hi[b.index] = std::min(st.hi[b.index], b.k);
    else st.lo[b.index] = std::max(st.lo[b.index], b.k);
    return st.lo[b.index] <= st.hi[b.index];
  }

  void offer(const std::vector<double>& x, double objective) {
    if (!incumbent_.empty() && objective >= incumbent_value_) return;
    incumbent_ = x;
    incumbent_value_ = objective;
  }

  // Restricts every group to the segment holding its current value and
  // rounds the remaining binaries; the resulting LP optimum is integral.
  void round_and_solve(const NodeState& st, const std::vector<double>& x, const Basis& basis) {
    NodeState h = st;
    for (std::size_t g = 0; g < cm_.groups.size(); ++g) {
      const auto& cg = cm_.groups[g];
      double value = 0;
      for (std::size_t j = 0; j < cg.segments; ++j) value += x[cg.psi_begin + j] * cg.breakpoints[j + 1];
      const double eps = 1e-9 * cg.breakpoints.back();
      int k = 1;
      while (k < static_cast<int>(cg.segments) && cg.breakpoints[static_cast<std::size_t>(k)] < value - eps) ++k;
      k = std::clamp(k, std::max(h.lo[g], 1), h.hi[g]);
      h.lo[g] = std::max(h.lo[g], k - 1);
      h.hi[g] = k;
    }
    for (std::size_t b = 0; b < cm_.plain.size(); ++b)
      if (h.fixed[b] < 0) h.fixed[b] = x[cm_.plain[b]] >= 0.5 ? 1 : 0;
    const LpResult res = solve_node(h, &basis);
    if (res.status != LpStatus::optimal) return;
    if (choose(res.x).found) return;
    offer(res.x, res.objective);
  }

  std::unique_ptr<Node> evaluate(const NodeState& st, const Basis* warm, double* objective, bool* feasible) {
    const LpResult res = solve_node(st, warm);
    if (feasible) *feasible = res.status == LpStatus::optimal;
    if (res.status != LpStatus::optimal) return nullptr;
    if (objective) *objective = res.objective;
    if (res.objective >= cutoff()) return nullptr;
    const BranchChoice b = choose(res.x);
    if (!b.found) {
      offer(res.x, res.objective);
      return nullptr;
    }
    ++evaluated_;
    if (incumbent_.empty() || evaluated_ <= 20 || evaluated_ % 20 == 0) round_and_solve(st, res.x, res.basis);
    if (res.objective >= cutoff()) return nullptr;
    auto node = std::make_unique<Node>();
    node->bound = res.objective;
    node->id = next_id_++;
    node->state = st;
    node->basis = res.basis;
    node->branch = b;
    return node;
  }

  std::vector<double> expand(const std::vector<double>& x) const {
    std::vector<double> full(p_.model.variables().size(), 0.0);
    for (std::size_t j = 0; j < full.size(); ++j)
      for (const auto& [k, c] : cm_.expr[j]) full[j] += c * x[k];
    for (const auto& g : cm_.groups) {
      const auto d = depths(g, x);
      for (std::size_t k = 1; k < g.segments; ++k) full[g.binaries[k - 1]] = d[k] >= 1.0 - opt_.integrality_tol ? 1.0 : 0.0;
    }
    for (std::size_t b = 0; b < cm_.plain.size(); ++b) full[cm_.plain_full[b]] = std::round(x[cm_.plain[b]]);
    return full;
  }

  const DispatchProblem& p_;
  SolveOptions opt_;
  CompactModel cm_;
  std::vector<double> incumbent_;
  double incumbent_value_ = kInf;
  long nodes_ = 0;
  long evaluated_ = 0;
  long next_id_ = 0;
  long iterations_ = 0;
};

}  // namespace

DispatchSolution solve(const DispatchProblem& problem, const SolveOptions& options) {
  BranchAndBound bb(problem, options);
  return bb.run();
}

}  // namespace ehub
