#include "kw/linear_program.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kw {

LinearSystem::LinearSystem(std::size_t num_vars) : nonnegative_(num_vars, false) {}

void LinearSystem::set_nonnegative(std::size_t var, bool nonnegative) {
  nonnegative_.at(var) = nonnegative;
}

void LinearSystem::add_row(Eigen::VectorXd coeffs, RowSense sense, double rhs) {
  if (static_cast<std::size_t>(coeffs.size()) != num_vars()) {
    throw std::invalid_argument("linear system: row length does not match variable count");
  }
  rows_.push_back({std::move(coeffs), sense, rhs});
}

double LinearSystem::max_violation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < num_vars(); ++j) {
    if (nonnegative_[j]) worst = std::max(worst, -x[static_cast<Eigen::Index>(j)]);
  }
  for (const Row& r : rows_) {
    const double lhs = r.coeffs.dot(x);
    switch (r.sense) {
      case RowSense::kLessEqual: worst = std::max(worst, lhs - r.rhs); break;
      case RowSense::kGreaterEqual: worst = std::max(worst, r.rhs - lhs); break;
      case RowSense::kEqual: worst = std::max(worst, std::abs(lhs - r.rhs)); break;
    }
  }
  return worst;
}

namespace {

// Dense tableau in canonical form: the basic columns form an identity.
class Tableau {
 public:
  Tableau(Eigen::MatrixXd a, Eigen::VectorXd b, std::vector<int> basis)
      : a_(std::move(a)), b_(std::move(b)), basis_(std::move(basis)) {}

  Eigen::Index rows() const { return a_.rows(); }
  Eigen::Index cols() const { return a_.cols(); }
  const std::vector<int>& basis() const { return basis_; }
  double rhs(Eigen::Index i) const { return b_[i]; }
  double at(Eigen::Index i, Eigen::Index j) const { return a_(i, j); }

  void pivot(Eigen::Index r, Eigen::Index c) {
    const double p = a_(r, c);
    a_.row(r) /= p;
    b_[r] /= p;
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
      if (i == r) continue;
      const double f = a_(i, c);
      if (f == 0.0) continue;
      a_.row(i) -= f * a_.row(r);
      b_[i] -= f * b_[r];
    }
    basis_[static_cast<std::size_t>(r)] = static_cast<int>(c);
  }

  void drop_row(Eigen::Index r) {
    const Eigen::Index m = a_.rows();
    Eigen::MatrixXd a(m - 1, a_.cols());
    Eigen::VectorXd b(m - 1);
    std::vector<int> basis;
    for (Eigen::Index i = 0, k = 0; i < m; ++i) {
      if (i == r) continue;
      a.row(k) = a_.row(i);
      b[k] = b_[i];
      basis.push_back(basis_[static_cast<std::size_t>(i)]);
      ++k;
    }
    a_ = std::move(a);
    b_ = std::move(b);
    basis_ = std::move(basis);
  }

  // Maximizes cost . x over columns flagged allowed. Returns false when
  // unbounded.
  bool optimize(const Eigen::VectorXd& cost, const std::vector<bool>& allowed, double tol) {
    const std::size_t max_iter = 50000;
    for (std::size_t it = 0; it < max_iter; ++it) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < cols(); ++j) {
        if (!allowed[static_cast<std::size_t>(j)]) continue;
        double d = cost[j];
        for (Eigen::Index i = 0; i < rows(); ++i) d -= cost[basis_[static_cast<std::size_t>(i)]] * a_(i, j);
        if (d > tol) {
          enter = j;  // Bland: first improving column
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < rows(); ++i) {
        if (a_(i, enter) <= tol) continue;
        const double ratio = b_[i] / a_(i, enter);
        if (leave < 0 || ratio < best - 1e-14 ||
            (std::abs(ratio - best) <= 1e-14 &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex: iteration limit reached");
  }

  Eigen::VectorXd solution() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cols());
    for (Eigen::Index i = 0; i < rows(); ++i) x[basis_[static_cast<std::size_t>(i)]] = b_[i];
    return x;
  }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  std::vector<int> basis_;
};

struct StandardForm {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  std::vector<Eigen::Index> pos;  // column of x_j (or its positive part)
  std::vector<Eigen::Index> neg;  // column of the negative part, -1 if x_j >= 0
  Eigen::Index structural = 0;    // columns before the artificials
};

StandardForm to_standard_form(const LinearSystem& sys) {
  const std::size_t n = sys.num_vars();
  const std::size_t m = sys.num_rows();
  StandardForm sf;
  Eigen::Index col = 0;
  for (std::size_t j = 0; j < n; ++j) {
    sf.pos.push_back(col++);
    sf.neg.push_back(sys.is_nonnegative(j) ? -1 : col++);
  }
  std::vector<Eigen::Index> slack(m, -1);
  for (std::size_t i = 0; i < m; ++i) {
    if (sys.row(i).sense != RowSense::kEqual) slack[i] = col++;
  }
  sf.structural = col;
  const auto rows = static_cast<Eigen::Index>(m);
  sf.a = Eigen::MatrixXd::Zero(rows, col + rows);
  sf.b = Eigen::VectorXd::Zero(rows);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& r = sys.row(i);
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double v = r.coeffs[static_cast<Eigen::Index>(j)];
      sf.a(ii, sf.pos[j]) = v;
      if (sf.neg[j] >= 0) sf.a(ii, sf.neg[j]) = -v;
    }
    if (r.sense == RowSense::kLessEqual) sf.a(ii, slack[i]) = 1.0;
    if (r.sense == RowSense::kGreaterEqual) sf.a(ii, slack[i]) = -1.0;
    sf.b[ii] = r.rhs;
    if (sf.b[ii] < 0.0) {
      sf.a.row(ii) *= -1.0;
      sf.b[ii] *= -1.0;
    }
    sf.a(ii, col + ii) = 1.0;
  }
  return sf;
}

}  // namespace

LpResult solve_lp(const LinearSystem& sys, const Eigen::VectorXd& objective, double tol) {
  if (static_cast<std::size_t>(objective.size()) != sys.num_vars()) {
    throw std::invalid_argument("solve_lp: objective length does not match variable count");
  }
  StandardForm sf = to_standard_form(sys);
  const Eigen::Index m = sf.a.rows();
  const Eigen::Index total = sf.a.cols();
  std::vector<int> basis;
  for (Eigen::Index i = 0; i < m; ++i) basis.push_back(static_cast<int>(sf.structural + i));
  const double scale = 1.0 + (m > 0 ? sf.b.cwiseAbs().maxCoeff() : 0.0);
  Tableau tab(sf.a, sf.b, basis);

  // Phase 1: drive the artificials to zero.
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total);
  phase1.tail(m).setConstant(-1.0);
  std::vector<bool> all(static_cast<std::size_t>(total), true);
  tab.optimize(phase1, all, tol);
  double infeasibility = 0.0;
  for (Eigen::Index i = 0; i < tab.rows(); ++i) {
    if (tab.basis()[static_cast<std::size_t>(i)] >= sf.structural) infeasibility += tab.rhs(i);
  }
  LpResult out;
  if (infeasibility > tol * scale) {
    out.status = LpStatus::kInfeasible;
    return out;
  }
  // Pivot remaining (zero-level) artificials out; drop redundant rows.
  for (Eigen::Index i = tab.rows() - 1; i >= 0; --i) {
    if (tab.basis()[static_cast<std::size_t>(i)] < sf.structural) continue;
    Eigen::Index c = -1;
    for (Eigen::Index j = 0; j < sf.structural; ++j) {
      if (std::abs(tab.at(i, j)) > 1e-9) {
        c = j;
        break;
      }
    }
    if (c >= 0) {
      tab.pivot(i, c);
    } else {
      tab.drop_row(i);
    }
  }

  // Phase 2 over structural columns only.
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(total);
  for (std::size_t j = 0; j < sys.num_vars(); ++j) {
    const double c = objective[static_cast<Eigen::Index>(j)];
    cost[sf.pos[j]] = c;
    if (sf.neg[j] >= 0) cost[sf.neg[j]] = -c;
  }
  std::vector<bool> allowed(static_cast<std::size_t>(total), false);
  for (Eigen::Index j = 0; j < sf.structural; ++j) allowed[static_cast<std::size_t>(j)] = true;
  const bool bounded = tab.optimize(cost, allowed, tol);

  const Eigen::VectorXd s = tab.solution();
  out.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.num_vars()));
  for (std::size_t j = 0; j < sys.num_vars(); ++j) {
    double v = s[sf.pos[j]];
    if (sf.neg[j] >= 0) v -= s[sf.neg[j]];
    out.x[static_cast<Eigen::Index>(j)] = v;
  }
  out.value = objective.dot(out.x);
  out.status = bounded ? LpStatus::kOptimal : LpStatus::kUnbounded;
  return out;
}

FeasibilityResult lp_feasibility(const LinearSystem& sys, double tol) {
  FeasibilityResult out;
  const LpResult primal =
      solve_lp(sys, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.num_vars())), tol);
  if (primal.status != LpStatus::kInfeasible) {
    out.feasible = true;
    out.witness = primal.x;
    return out;
  }
  // Alternative system: one multiplier per row.
  const std::size_t m = sys.num_rows();
  const std::size_t n = sys.num_vars();
  LinearSystem alt(m);
  Eigen::VectorXd sign = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const RowSense s = sys.row(i).sense;
    if (s == RowSense::kLessEqual) alt.set_nonnegative(i);
    if (s == RowSense::kGreaterEqual) {
      alt.set_nonnegative(i);  // y_i = -y'_i with y'_i >= 0
      sign[static_cast<Eigen::Index>(i)] = -1.0;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    Eigen::VectorXd col(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      col[static_cast<Eigen::Index>(i)] =
          sign[static_cast<Eigen::Index>(i)] * sys.row(i).coeffs[static_cast<Eigen::Index>(j)];
    }
    alt.add_row(col, sys.is_nonnegative(j) ? RowSense::kGreaterEqual : RowSense::kEqual, 0.0);
  }
  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    b[static_cast<Eigen::Index>(i)] = sign[static_cast<Eigen::Index>(i)] * sys.row(i).rhs;
  }
  alt.add_row(b, RowSense::kEqual, -1.0);
  const LpResult dual = solve_lp(alt, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m)), tol);
  if (dual.status != LpStatus::kInfeasible) {
    out.certificate = dual.x.cwiseProduct(sign);
  }
  return out;
}

double farkas_violation(const LinearSystem& sys, const Eigen::VectorXd& y) {
  const std::size_t m = sys.num_rows();
  if (static_cast<std::size_t>(y.size()) != m) return 1.0;
  double worst = 0.0;
  Eigen::VectorXd ya = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.num_vars()));
  double yb = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double yi = y[static_cast<Eigen::Index>(i)];
    const auto& r = sys.row(i);
    if (r.sense == RowSense::kLessEqual) worst = std::max(worst, -yi);
    if (r.sense == RowSense::kGreaterEqual) worst = std::max(worst, yi);
    ya += yi * r.coeffs;
    yb += yi * r.rhs;
  }
  for (std::size_t j = 0; j < sys.num_vars(); ++j) {
    const double v = ya[static_cast<Eigen::Index>(j)];
    worst = std::max(worst, sys.is_nonnegative(j) ? -v : std::abs(v));
  }
  return std::max(worst, 1.0 + yb);
}

}  // namespace kw
