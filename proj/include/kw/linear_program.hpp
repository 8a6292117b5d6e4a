#ifndef KW_LINEAR_PROGRAM_HPP
#define KW_LINEAR_PROGRAM_HPP

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace kw {

enum class RowSense { kLessEqual, kEqual, kGreaterEqual };

// A system of linear rows over variables that are free unless flagged
// nonnegative.
class LinearSystem {
 public:
  struct Row {
    Eigen::VectorXd coeffs;
    RowSense sense;
    double rhs;
  };

  explicit LinearSystem(std::size_t num_vars);

  void set_nonnegative(std::size_t var, bool nonnegative = true);
  void add_row(Eigen::VectorXd coeffs, RowSense sense, double rhs);

  std::size_t num_vars() const { return nonnegative_.size(); }
  std::size_t num_rows() const { return rows_.size(); }
  const Row& row(std::size_t i) const { return rows_.at(i); }
  const std::vector<Row>& rows() const { return rows_; }
  bool is_nonnegative(std::size_t var) const { return nonnegative_.at(var); }

  // Largest violation of any row or sign restriction at x.
  double max_violation(const Eigen::VectorXd& x) const;

 private:
  std::vector<bool> nonnegative_;
  std::vector<Row> rows_;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  Eigen::VectorXd x;
  double value = 0.0;
};

// maximize objective . x subject to the system. Dense two-phase simplex
// with Bland's rule, so it terminates on degenerate problems.
LpResult solve_lp(const LinearSystem& system, const Eigen::VectorXd& objective,
                  double tol = 1e-10);

struct FeasibilityResult {
  bool feasible = false;
  // Feasible: a point satisfying every row to the tolerance.
  Eigen::VectorXd witness;
  // Infeasible: Farkas multipliers y (>= 0 on <= rows, <= 0 on >= rows, free
  // on = rows) with y'A = 0 on free variables, y'A >= 0 on nonnegative ones,
  // and y'b = -1 < 0.
  Eigen::VectorXd certificate;
};

FeasibilityResult lp_feasibility(const LinearSystem& system, double tol = 1e-10);

// Independent check of a Farkas certificate; returns the worst violation of
// its defining conditions (<= 0 slack means it proves infeasibility).
double farkas_violation(const LinearSystem& system, const Eigen::VectorXd& certificate);

}  // namespace kw

#endif  // KW_LINEAR_PROGRAM_HPP
