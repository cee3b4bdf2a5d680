#include "ehub/lp.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ehub {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

class Simplex {
 public:
  Simplex(const LpProblem& p, const LpOptions& o)
      : A_(*p.matrix), opt_(o), n_(static_cast<int>(p.cols())), m_(static_cast<int>(p.rows())), N_(n_ + m_) {
    if (A_.rows() != m_ || A_.cols() != n_) throw std::invalid_argument("LP matrix shape does not match bounds");
    double cmax = 0;
    for (double c : p.cost) cmax = std::max(cmax, std::abs(c));
    cost_scale_ = cmax > 0 ? 1.0 / cmax : 1.0;
    c_.assign(N_, 0.0);
    lo_.resize(N_);
    hi_.resize(N_);
    for (int j = 0; j < n_; ++j) {
      c_[j] = p.cost[j] * cost_scale_;
      lo_[j] = p.col_lower[j];
      hi_[j] = p.col_upper[j];
    }
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = p.row_lower[i];
      hi_[n_ + i] = p.row_upper[i];
    }
    for (int j = 0; j < N_; ++j)
      if (lo_[j] > hi_[j]) infeasible_bounds_ = true;
    x_.assign(N_, 0.0);
    status_.assign(N_, VarStatus::at_lower);
    head_.assign(m_, -1);
    max_iter_ = o.max_iterations > 0 ? o.max_iterations : std::max<long>(20000, 40L * N_);
  }

  LpResult run(const Basis* warm) {
    LpResult res;
    if (infeasible_bounds_) {
      res.status = LpStatus::infeasible;
      return res;
    }
    if (!(warm && load_basis(*warm) && refactor())) {
      slack_basis();
      if (!refactor()) throw std::runtime_error("LP: logical basis failed to factor");
    }
    res.status = iterate();
    res.iterations = iterations_;
    res.x.assign(x_.begin(), x_.begin() + n_);
    res.row_activity.assign(x_.begin() + n_, x_.end());
    res.objective = 0;
    for (int j = 0; j < n_; ++j) res.objective += c_[j] / cost_scale_ * x_[j];
    res.basis.status = status_;
    return res;
  }

 private:
  struct Eta {
    int row;
    double pivot;
    std::vector<std::pair<int, double>> entries;  // off-pivot part of the column
  };

  double tol(double bound) const { return opt_.feasibility_tol * std::max(1.0, std::abs(bound)); }

  void place_nonbasic(int j, VarStatus hint) {
    const bool lo_ok = std::isfinite(lo_[j]), hi_ok = std::isfinite(hi_[j]);
    VarStatus s = hint;
    if (s == VarStatus::at_upper && !hi_ok) s = VarStatus::at_lower;
    if (s == VarStatus::at_lower && !lo_ok) s = hi_ok ? VarStatus::at_upper : VarStatus::free_zero;
    if (s == VarStatus::free_zero && (lo_ok || hi_ok)) s = lo_ok ? VarStatus::at_lower : VarStatus::at_upper;
    status_[j] = s;
    x_[j] = s == VarStatus::at_lower ? lo_[j] : s == VarStatus::at_upper ? hi_[j] : 0.0;
  }

  void slack_basis() {
    for (int j = 0; j < n_; ++j) place_nonbasic(j, VarStatus::at_lower);
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      status_[n_ + i] = VarStatus::basic;
    }
  }

  bool load_basis(const Basis& b) {
    if (static_cast<int>(b.status.size()) != N_) return false;
    int count = 0;
    for (int j = 0; j < N_; ++j) count += b.status[j] == VarStatus::basic;
    if (count != m_) return false;
    int r = 0;
    for (int j = 0; j < N_; ++j) {
      if (b.status[j] == VarStatus::basic) {
        status_[j] = VarStatus::basic;
        head_[r++] = j;
      } else {
        place_nonbasic(j, b.status[j]);
      }
    }
    return true;
  }

  template <typename F>
  void for_column(int j, F&& f) const {
    if (j < n_) {
      for (SpMat::InnerIterator it(A_, j); it; ++it) f(static_cast<int>(it.row()), it.value());
    } else {
      f(j - n_, -1.0);
    }
  }

  bool refactor() {
    etas_.clear();
    since_refactor_ = 0;
    if (m_ == 0) return true;
    std::vector<Eigen::Triplet<double>> trips;
    for (int r = 0; r < m_; ++r) for_column(head_[r], [&](int i, double v) { trips.emplace_back(i, r, v); });
    SpMat B(m_, m_);
    B.setFromTriplets(trips.begin(), trips.end());
    B.makeCompressed();
    lu_.analyzePattern(B);
    lu_.factorize(B);
    if (lu_.info() != Eigen::Success) return false;
    compute_basics();
    return true;
  }

  void ftran(Vec& z) const {
    if (m_ == 0) return;
    z = lu_.solve(z).eval();
    for (const auto& e : etas_) {
      const double zr = z(e.row) / e.pivot;
      z(e.row) = zr;
      if (zr != 0.0)
        for (const auto& [i, a] : e.entries) z(i) -= a * zr;
    }
  }

  void btran(Vec& w) const {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = w(it->row);
      for (const auto& [i, a] : it->entries) s -= w(i) * a;
      w(it->row) = s / it->pivot;
    }
    w = lu_.transpose().solve(w).eval();
  }

  void compute_basics() {
    if (m_ == 0) return;
    Vec rhs = Vec::Zero(m_);
    for (int j = 0; j < N_; ++j)
      if (status_[j] != VarStatus::basic && x_[j] != 0.0) {
        const double xj = x_[j];
        for_column(j, [&](int i, double v) { rhs(i) -= v * xj; });
      }
    ftran(rhs);
    for (int r = 0; r < m_; ++r) x_[head_[r]] = rhs(r);
  }

  // -1 below lower bound, +1 above upper bound, 0 within tolerance.
  int infeasibility(int j) const {
    if (x_[j] < lo_[j] - tol(lo_[j])) return -1;
    if (x_[j] > hi_[j] + tol(hi_[j])) return 1;
    return 0;
  }

  bool primal_feasible() const {
    for (int r = 0; r < m_; ++r)
      if (infeasibility(head_[r]) != 0) return false;
    return true;
  }

  LpStatus iterate() {
    bool phase1 = !primal_feasible();
    bool verified_once = false;
    int degenerate_run = 0;
    std::vector<char> rejected(N_, 0);
    Vec y(m_), alpha(m_);

    while (true) {
      if (iterations_ >= max_iter_) return LpStatus::iteration_limit;
      if (since_refactor_ >= opt_.refactor_interval) {
        if (!refactor()) recover();
        phase1 = !primal_feasible();
      }
      if (phase1 && primal_feasible()) phase1 = false;

      for (int r = 0; r < m_; ++r) {
        const int j = head_[r];
        y(r) = phase1 ? static_cast<double>(infeasibility(j)) : c_[j];
      }
      btran(y);

      const bool bland = degenerate_run > 50;
      int q = -1;
      double best = 0, dq = 0;
      for (int j = 0; j < N_; ++j) {
        const VarStatus s = status_[j];
        if (s == VarStatus::basic || rejected[j] || lo_[j] == hi_[j]) continue;
        double d = phase1 ? 0.0 : c_[j];
        for_column(j, [&](int i, double v) { d -= y(i) * v; });
        double gain = 0;
        if (s == VarStatus::at_lower) gain = -d;
        else if (s == VarStatus::at_upper) gain = d;
        else gain = std::abs(d);
        if (gain <= opt_.optimality_tol) continue;
        if (q < 0 || (!bland && gain > best)) {
          q = j;
          best = gain;
          dq = d;
          if (bland) break;
        }
      }

      if (q < 0) {
        // Confirm against a fresh factorization before concluding.
        if (!verified_once || since_refactor_ > 0) {
          verified_once = true;
          if (!refactor()) recover();
          std::fill(rejected.begin(), rejected.end(), 0);
          phase1 = !primal_feasible();
          continue;
        }
        return phase1 ? LpStatus::infeasible : LpStatus::optimal;
      }
      verified_once = false;

      const double dir = status_[q] == VarStatus::at_upper || (status_[q] == VarStatus::free_zero && dq > 0) ? -1.0 : 1.0;
      alpha.setZero();
      for_column(q, [&](int i, double v) { alpha(i) = v; });
      ftran(alpha);

      // Harris two-pass ratio test.
      double theta_max = kInf;
      auto limit = [&](int r, double g, bool relaxed, double& t, bool& to_upper) {
        const int j = head_[r];
        const double xj = x_[j];
        const int inf = phase1 ? infeasibility(j) : 0;
        const double dl = relaxed ? tol(lo_[j]) : 0.0, du = relaxed ? tol(hi_[j]) : 0.0;
        if (g > opt_.pivot_tol) {  // x_j decreases
          if (inf > 0) {
            t = (xj - hi_[j] + du) / g;
            to_upper = true;
            return true;
          }
          if (inf == 0 && std::isfinite(lo_[j])) {
            t = (xj - lo_[j] + dl) / g;
            to_upper = false;
            return true;
          }
        } else if (g < -opt_.pivot_tol) {  // x_j increases
          if (inf < 0) {
            t = (lo_[j] - xj + dl) / -g;
            to_upper = false;
            return true;
          }
          if (inf == 0 && std::isfinite(hi_[j])) {
            t = (hi_[j] - xj + du) / -g;
            to_upper = true;
            return true;
          }
        }
        return false;
      };
      for (int r = 0; r < m_; ++r) {
        double t;
        bool up;
        if (limit(r, dir * alpha(r), true, t, up)) theta_max = std::min(theta_max, std::max(t, 0.0));
      }
      const double range = hi_[q] - lo_[q];
      int leave = -1;
      bool leave_upper = false;
      double theta = 0, best_piv = 0;
      if (range <= theta_max) {
        theta = range;
      } else if (std::isfinite(theta_max)) {
        for (int r = 0; r < m_; ++r) {
          const double g = dir * alpha(r);
          double t;
          bool up;
          if (!limit(r, g, false, t, up) || t > theta_max) continue;
          const bool better = leave < 0 || (bland ? head_[r] < head_[leave] : std::abs(g) > best_piv);
          if (better) {
            leave = r;
            leave_upper = up;
            best_piv = std::abs(g);
            theta = std::max(t, 0.0);
          }
        }
      }
      if (!std::isfinite(range) && leave < 0) {
        if (!phase1) return LpStatus::unbounded;
        rejected[q] = 1;
        continue;
      }

      ++iterations_;
      ++since_refactor_;
      degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;
      std::fill(rejected.begin(), rejected.end(), 0);

      for (int r = 0; r < m_; ++r)
        if (alpha(r) != 0.0) x_[head_[r]] -= theta * dir * alpha(r);
      if (leave < 0) {
        status_[q] = dir > 0 ? VarStatus::at_upper : VarStatus::at_lower;
        x_[q] = dir > 0 ? hi_[q] : lo_[q];
        continue;
      }
      x_[q] += dir * theta;
      const int out = head_[leave];
      status_[out] = leave_upper ? VarStatus::at_upper : VarStatus::at_lower;
      x_[out] = leave_upper ? hi_[out] : lo_[out];
      status_[q] = VarStatus::basic;
      head_[leave] = q;

      Eta eta{leave, alpha(leave), {}};
      for (int r = 0; r < m_; ++r)
        if (r != leave && std::abs(alpha(r)) > 1e-14) eta.entries.emplace_back(r, alpha(r));
      etas_.push_back(std::move(eta));
    }
  }

  void recover() {
    slack_basis();
    if (!refactor()) throw std::runtime_error("LP: logical basis failed to factor");
  }

  const SpMat& A_;
  LpOptions opt_;
  int n_, m_, N_;
  double cost_scale_ = 1;
  bool infeasible_bounds_ = false;
  long max_iter_ = 0;
  long iterations_ = 0;
  int since_refactor_ = 0;
  std::vector<double> c_, lo_, hi_, x_;
  std::vector<VarStatus> status_;
  std::vector<int> head_;
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
};

}  // namespace

LpResult solve_lp(const LpProblem& problem, const LpOptions& options, const Basis* warm) {
  if (!problem.matrix) throw std::invalid_argument("LP problem has no matrix");
  Simplex simplex(problem, options);
  return simplex.run(warm);
}

}  // namespace ehub
