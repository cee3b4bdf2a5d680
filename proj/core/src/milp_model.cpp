#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <set>
#include <sstream>

#include "ehub/format.hpp"
#include "ehub/milp.hpp"

namespace ehub {

std::size_t MilpModel::add_variable(std::string name, double lower, double upper, double cost, bool integer) {
  vars_.push_back({std::move(name), lower, upper, cost, integer});
  return vars_.size() - 1;
}

std::size_t MilpModel::add_row(std::string name, double lower, double upper,
                               std::vector<std::pair<std::size_t, double>> terms) {
  rows_.push_back({std::move(name), lower, upper, std::move(terms)});
  return rows_.size() - 1;
}

std::size_t MilpModel::binary_count() const {
  return static_cast<std::size_t>(std::count_if(vars_.begin(), vars_.end(), [](const auto& v) { return v.integer; }));
}

LpProblem MilpModel::relaxation() const {
  LpProblem lp;
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (const auto& [j, v] : rows_[i].terms)
      if (v != 0.0) trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    lp.row_lower.push_back(rows_[i].lower);
    lp.row_upper.push_back(rows_[i].upper);
  }
  auto A = std::make_shared<Eigen::SparseMatrix<double>>(static_cast<Eigen::Index>(rows_.size()),
                                                          static_cast<Eigen::Index>(vars_.size()));
  A->setFromTriplets(trips.begin(), trips.end());
  A->makeCompressed();
  lp.matrix = std::move(A);
  for (const auto& v : vars_) {
    lp.cost.push_back(v.cost);
    lp.col_lower.push_back(v.lower);
    lp.col_upper.push_back(v.upper);
  }
  return lp;
}

double MilpModel::objective(std::span<const double> x) const {
  double z = 0;
  for (std::size_t j = 0; j < vars_.size(); ++j) z += vars_[j].cost * x[j];
  return z;
}

double MilpModel::max_violation(std::span<const double> x) const {
  double worst = 0;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    worst = std::max({worst, vars_[j].lower - x[j], x[j] - vars_[j].upper});
    if (vars_[j].integer) worst = std::max(worst, std::abs(x[j] - std::round(x[j])));
  }
  for (const auto& r : rows_) {
    double a = 0;
    for (const auto& [j, v] : r.terms) a += v * x[j];
    worst = std::max({worst, r.lower - a, a - r.upper});
  }
  return worst;
}

std::vector<std::string> lp_names(const MilpModel& model) {
  std::vector<std::string> names;
  std::set<std::string> used;
  for (const auto& v : model.variables()) {
    std::string base = sanitize_identifier(v.name);
    if (!base.empty() && (std::isdigit(static_cast<unsigned char>(base[0])) || base[0] == 'e' || base[0] == 'E'))
      base = "x_" + base;
    std::string name = base;
    for (int k = 2; used.count(name); ++k) name = base + "_" + std::to_string(k);
    used.insert(name);
    names.push_back(name);
  }
  return names;
}

namespace {

void write_expression(std::ostringstream& out, const std::vector<std::pair<std::size_t, double>>& terms,
                      const std::vector<std::string>& names) {
  std::size_t width = 0;
  bool first = true;
  for (const auto& [j, v] : terms) {
    if (v == 0.0) continue;
    std::string term = (v < 0 ? "- " : (first ? "" : "+ ")) + format_double(std::abs(v)) + " " + names[j];
    if (width + term.size() > 200) {
      out << "\n   ";
      width = 0;
    }
    out << ' ' << term;
    width += term.size() + 1;
    first = false;
  }
  if (first) out << " 0 " << names.front();
}

}  // namespace

std::string MilpModel::to_lp_format() const {
  const auto names = lp_names(*this);
  std::ostringstream out;
  out << "\\ energy hub dispatch\nMinimize\n obj:";
  std::vector<std::pair<std::size_t, double>> obj;
  for (std::size_t j = 0; j < vars_.size(); ++j)
    if (vars_[j].cost != 0.0) obj.emplace_back(j, vars_[j].cost);
  if (obj.empty() && !vars_.empty()) obj.emplace_back(0, 0.0);
  if (!vars_.empty()) write_expression(out, obj, names);
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    std::string base = "c" + std::to_string(i + 1) + "_" + sanitize_identifier(r.name);
    auto emit = [&](const std::string& name, const char* sense, double rhs) {
      out << ' ' << name << ':';
      write_expression(out, r.terms, names);
      out << ' ' << sense << ' ' << format_double(rhs) << '\n';
    };
    if (r.lower == r.upper) {
      emit(base, "=", r.lower);
    } else {
      if (std::isfinite(r.lower)) emit(std::isfinite(r.upper) ? base + "_lo" : base, ">=", r.lower);
      if (std::isfinite(r.upper)) emit(std::isfinite(r.lower) ? base + "_hi" : base, "<=", r.upper);
    }
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    const auto& v = vars_[j];
    if (v.integer && v.lower == 0.0 && v.upper == 1.0) continue;
    const bool lo = std::isfinite(v.lower), hi = std::isfinite(v.upper);
    if (!lo && !hi) {
      out << ' ' << names[j] << " free\n";
    } else if (v.lower == v.upper) {
      out << ' ' << names[j] << " = " << format_double(v.lower) << '\n';
    } else {
      out << ' ' << (lo ? format_double(v.lower) : "-inf") << " <= " << names[j];
      if (hi) out << " <= " << format_double(v.upper);
      out << '\n';
    }
  }
  bool any_int = false;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    if (!vars_[j].integer) continue;
    if (!any_int) out << "Binaries\n";
    any_int = true;
    out << ' ' << names[j] << '\n';
  }
  out << "End\n";
  return out.str();
}

}  // namespace ehub
