#ifndef KW_CONCAVE_PROGRAM_HPP
#define KW_CONCAVE_PROGRAM_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kw/linear_program.hpp"

namespace kw {

struct PieceValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

// A smooth concave function of the full variable vector. Affine pieces
// carry their coefficients so programs built only from them go to the LP path.
struct ConcavePiece {
  std::function<PieceValue(const Eigen::VectorXd&)> eval;
  std::optional<Eigen::VectorXd> affine_coeffs;
  double affine_offset = 0.0;

  static ConcavePiece affine(Eigen::VectorXd coeffs, double offset);
  double value(const Eigen::VectorXd& x) const;
  bool is_affine() const { return affine_coeffs.has_value(); }
};

// piece(x) >= bound.
struct LevelConstraint {
  ConcavePiece piece;
  double bound = 0.0;
};

// maximize min_k objective[k](x) subject to rows, levels and the box.
struct ConcaveProgram {
  explicit ConcaveProgram(std::size_t dim);

  std::size_t dim;
  std::vector<ConcavePiece> objective;
  std::vector<LinearSystem::Row> rows;
  std::vector<LevelConstraint> levels;
  Eigen::VectorXd lower;  // -inf allowed
  Eigen::VectorXd upper;  // +inf allowed
  // Lipschitz bound on the objective over the box (sup-norm steps), if known.
  std::optional<double> lipschitz;

  void add_row(Eigen::VectorXd coeffs, RowSense sense, double rhs);
  double objective_value(const Eigen::VectorXd& x) const;
  // Worst violation of rows, levels and box at x.
  double max_violation(const Eigen::VectorXd& x) const;
};

enum class SolveStatus { kOptimal, kMaxIterations, kInfeasible };

std::string to_string(SolveStatus status);

struct SolveResult {
  SolveStatus status = SolveStatus::kInfeasible;
  Eigen::VectorXd point;
  double value = 0.0;
  // One per program row (free sign on equality rows), then per box bound.
  Eigen::VectorXd row_multipliers;
  Eigen::VectorXd lower_multipliers;
  Eigen::VectorXd upper_multipliers;
  Eigen::VectorXd level_multipliers;
  // Convex weights on the objective pieces.
  Eigen::VectorXd piece_weights;
  // l1 stationarity residual of the certificate; infinity when not computed.
  double certificate_gap = 0.0;
  double complementarity_gap = 0.0;
  std::size_t iterations = 0;
  std::string message;
};

struct OptimizerConfig {
  double feasibility_tolerance = 1e-9;
  double stationarity_tolerance = 1e-7;
  // Constraint or piece counts as active within this distance.
  double active_tolerance = 1e-7;
  // Barrier stops once (terms / tau) <= duality_gap * (1 + |value|).
  double duality_gap = 1e-11;
  std::size_t max_iterations = 100000;
  bool certify = true;
  bool polish = true;
  // Optional point satisfying rows and box with levels at or above bound;
  // used to find a strictly feasible start when level constraints exist.
  std::optional<Eigen::VectorXd> start;
};

SolveResult maximize_concave(const ConcaveProgram& program, const OptimizerConfig& config = {});

// Exhaustive search over a uniform grid of the box with `resolution`
// intervals per axis. Points count as feasible within `feasibility` of every
// row and level. The grid may hold at most kGridPointCap points.
inline constexpr double kGridPointCap = 1e8;
SolveResult grid_oracle(const ConcaveProgram& program, std::size_t resolution,
                        double feasibility = 1e-12);

// KKT certificate at x: minimizes the l1 stationarity residual over convex
// piece weights on the active pieces and sign-correct multipliers on the
// active rows, bounds and levels. Fills the multiplier fields of `result`.
void certify_kkt(const ConcaveProgram& program, const Eigen::VectorXd& x,
                 const OptimizerConfig& config, SolveResult& result);

// Largest observed violation of midpoint concavity of the objective over
// `samples` random pairs in the box (which must be bounded).
double midpoint_concavity_violation(const ConcaveProgram& program, std::size_t samples,
                                    std::uint64_t seed);

}  // namespace kw

#endif  // KW_CONCAVE_PROGRAM_HPP
