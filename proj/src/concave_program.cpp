#include "kw/concave_program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <fmt/format.h>

#include "kw/state_space.hpp"

namespace kw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Rows below this norm are treated as constant.
constexpr double kZeroRow = 1e-14;
// Phase-1 slack below which rows are screened for implicit equalities.
constexpr double kInteriorSlack = 1e-10;

}  // namespace

ConcavePiece ConcavePiece::affine(Eigen::VectorXd coeffs, double offset) {
  ConcavePiece p;
  const Eigen::Index n = coeffs.size();
  p.eval = [coeffs, offset, n](const Eigen::VectorXd& x) {
    return PieceValue{coeffs.dot(x) + offset, coeffs, Eigen::MatrixXd::Zero(n, n)};
  };
  p.affine_coeffs = std::move(coeffs);
  p.affine_offset = offset;
  return p;
}

double ConcavePiece::value(const Eigen::VectorXd& x) const {
  if (affine_coeffs) return affine_coeffs->dot(x) + affine_offset;
  return eval(x).value;
}

ConcaveProgram::ConcaveProgram(std::size_t d)
    : dim(d),
      lower(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), -kInf)),
      upper(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), kInf)) {}

void ConcaveProgram::add_row(Eigen::VectorXd coeffs, RowSense sense, double rhs) {
  if (static_cast<std::size_t>(coeffs.size()) != dim) {
    throw ModelError("concave program: row length does not match dimension");
  }
  rows.push_back({std::move(coeffs), sense, rhs});
}

double ConcaveProgram::objective_value(const Eigen::VectorXd& x) const {
  double v = kInf;
  for (const ConcavePiece& p : objective) v = std::min(v, p.value(x));
  return v;
}

double ConcaveProgram::max_violation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  for (const auto& r : rows) {
    const double lhs = r.coeffs.dot(x);
    switch (r.sense) {
      case RowSense::kLessEqual: worst = std::max(worst, lhs - r.rhs); break;
      case RowSense::kGreaterEqual: worst = std::max(worst, r.rhs - lhs); break;
      case RowSense::kEqual: worst = std::max(worst, std::abs(lhs - r.rhs)); break;
    }
  }
  for (const LevelConstraint& l : levels) worst = std::max(worst, l.bound - l.piece.value(x));
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    worst = std::max({worst, lower[j] - x[j], x[j] - upper[j]});
  }
  return worst;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kMaxIterations: return "max-iterations";
    case SolveStatus::kInfeasible: return "infeasible";
  }
  return "?";
}

namespace {

// Inequalities G x <= h with unit-norm rows, equalities A x = b.
struct Polyhedron {
  std::vector<Eigen::VectorXd> g;
  std::vector<double> h;
  std::vector<Eigen::VectorXd> a;
  std::vector<double> b;
  std::vector<const LevelConstraint*> nonlinear_levels;
  bool contradictory = false;

  void add_le(Eigen::VectorXd row, double rhs, double tol) {
    const double norm = row.norm();
    if (norm < kZeroRow) {
      if (rhs < -tol) contradictory = true;
      return;
    }
    g.push_back(row / norm);
    h.push_back(rhs / norm);
  }
  void add_eq(Eigen::VectorXd row, double rhs, double tol) {
    const double norm = row.norm();
    if (norm < kZeroRow) {
      if (std::abs(rhs) > tol) contradictory = true;
      return;
    }
    a.push_back(row / norm);
    b.push_back(rhs / norm);
  }
};

Polyhedron normalize(const ConcaveProgram& prog, double tol) {
  Polyhedron poly;
  const auto n = static_cast<Eigen::Index>(prog.dim);
  for (const auto& r : prog.rows) {
    switch (r.sense) {
      case RowSense::kLessEqual: poly.add_le(r.coeffs, r.rhs, tol); break;
      case RowSense::kGreaterEqual: poly.add_le(-r.coeffs, -r.rhs, tol); break;
      case RowSense::kEqual: poly.add_eq(r.coeffs, r.rhs, tol); break;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lo = prog.lower[j];
    const double up = prog.upper[j];
    if (lo > up) {
      poly.contradictory = true;
      continue;
    }
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(n, j);
    if (lo == up) {
      poly.add_eq(e, lo, tol);
      continue;
    }
    if (std::isfinite(lo)) poly.add_le(-e, -lo, tol);
    if (std::isfinite(up)) poly.add_le(e, up, tol);
  }
  for (const LevelConstraint& l : prog.levels) {
    if (l.piece.is_affine()) {
      poly.add_le(-*l.piece.affine_coeffs, l.piece.affine_offset - l.bound, tol);
    } else {
      poly.nonlinear_levels.push_back(&l);
    }
  }
  return poly;
}

// Phase 1: maximize the common slack s <= 1 of the inequalities.
LpResult max_slack(const Polyhedron& poly, std::size_t n) {
  LinearSystem sys(n + 1);
  const auto ni = static_cast<Eigen::Index>(n);
  for (std::size_t i = 0; i < poly.g.size(); ++i) {
    Eigen::VectorXd row(ni + 1);
    row << poly.g[i], 1.0;
    sys.add_row(row, RowSense::kLessEqual, poly.h[i]);
  }
  for (std::size_t i = 0; i < poly.a.size(); ++i) {
    Eigen::VectorXd row(ni + 1);
    row << poly.a[i], 0.0;
    sys.add_row(row, RowSense::kEqual, poly.b[i]);
  }
  sys.add_row(Eigen::VectorXd::Unit(ni + 1, ni), RowSense::kLessEqual, 1.0);
  return solve_lp(sys, Eigen::VectorXd::Unit(ni + 1, ni));
}

// Moves inequalities that cannot hold strictly into the equalities.
void extract_implicit_equalities(Polyhedron& poly, std::size_t n) {
  LinearSystem sys(n);
  for (std::size_t i = 0; i < poly.g.size(); ++i) sys.add_row(poly.g[i], RowSense::kLessEqual, poly.h[i]);
  for (std::size_t i = 0; i < poly.a.size(); ++i) sys.add_row(poly.a[i], RowSense::kEqual, poly.b[i]);
  std::vector<std::size_t> implicit;
  for (std::size_t i = 0; i < poly.g.size(); ++i) {
    const LpResult r = solve_lp(sys, -poly.g[i]);
    if (r.status == LpStatus::kOptimal && poly.h[i] + r.value <= kInteriorSlack) implicit.push_back(i);
  }
  for (auto it = implicit.rbegin(); it != implicit.rend(); ++it) {
    poly.a.push_back(poly.g[*it]);
    poly.b.push_back(poly.h[*it]);
    poly.g.erase(poly.g.begin() + static_cast<std::ptrdiff_t>(*it));
    poly.h.erase(poly.h.begin() + static_cast<std::ptrdiff_t>(*it));
  }
}

Eigen::MatrixXd null_space(const Polyhedron& poly, std::size_t n) {
  const auto ni = static_cast<Eigen::Index>(n);
  if (poly.a.empty()) return Eigen::MatrixXd::Identity(ni, ni);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(poly.a.size()), ni);
  for (std::size_t i = 0; i < poly.a.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = poly.a[i].transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = 1e-10 * std::max(1.0, s.size() ? s[0] : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) rank += s[i] > cut ? 1 : 0;
  return svd.matrixV().rightCols(ni - rank);
}

bool levels_strict(const Polyhedron& poly, const Eigen::VectorXd& x) {
  for (const LevelConstraint* l : poly.nonlinear_levels) {
    double v;
    try {
      v = l->piece.value(x);
    } catch (const ModelError&) {
      return false;
    }
    if (!(v > l->bound)) return false;
  }
  return true;
}

bool rows_strict(const Polyhedron& poly, const Eigen::VectorXd& x) {
  for (std::size_t i = 0; i < poly.g.size(); ++i) {
    if (!(poly.h[i] - poly.g[i].dot(x) > 0.0)) return false;
  }
  return true;
}

// Log-barrier for  max t  s.t.  t <= p_k(x), G x <= h, l_j(x) >= L_j,
// over x = x0 + N y.
class Barrier {
 public:
  Barrier(const ConcaveProgram& prog, const Polyhedron& poly, Eigen::VectorXd x0, Eigen::MatrixXd basis)
      : prog_(prog), poly_(poly), x0_(std::move(x0)), basis_(std::move(basis)) {
    const auto m = static_cast<Eigen::Index>(poly.g.size());
    gr_.resize(m, basis_.cols());
    hr_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      gr_.row(i) = poly.g[static_cast<std::size_t>(i)].transpose() * basis_;
      hr_[i] = poly.h[static_cast<std::size_t>(i)] - poly.g[static_cast<std::size_t>(i)].dot(x0_);
    }
  }

  Eigen::Index free_dim() const { return basis_.cols(); }
  std::size_t terms() const {
    return prog_.objective.size() + poly_.g.size() + poly_.nonlinear_levels.size();
  }
  Eigen::VectorXd point(const Eigen::VectorXd& z) const {
    return x0_ + basis_ * z.head(basis_.cols());
  }

  struct Eval {
    bool ok = false;
    std::vector<double> slacks;  // pieces, rows, levels
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
  };

  Eval evaluate(const Eigen::VectorXd& z, double tau, bool derivs) const {
    Eval out;
    const Eigen::Index d = basis_.cols();
    const Eigen::Index n = x0_.size();
    const double t = z[d];
    const Eigen::VectorXd x = point(z);
    const Eigen::VectorXd y = z.head(d);
    Eigen::VectorXd gx = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd hxx = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd hxt = Eigen::VectorXd::Zero(n);
    double gt = tau;
    double htt = 0.0;
    auto add_piece = [&](const ConcavePiece& piece, double offset, bool with_t) {
      PieceValue pv;
      try {
        if (!derivs && piece.is_affine()) {
          pv.value = piece.value(x);
        } else {
          pv = piece.eval(x);
        }
      } catch (const ModelError&) {
        return false;
      }
      const double s = pv.value - offset - (with_t ? t : 0.0);
      if (!(s > 0.0) || !std::isfinite(s)) return false;
      out.slacks.push_back(s);
      if (derivs) {
        gx += pv.gradient / s;
        hxx += pv.hessian / s - pv.gradient * pv.gradient.transpose() / (s * s);
        if (with_t) {
          gt -= 1.0 / s;
          htt -= 1.0 / (s * s);
          hxt += pv.gradient / (s * s);
        }
      }
      return true;
    };
    for (const ConcavePiece& p : prog_.objective) {
      if (!add_piece(p, 0.0, true)) return out;
    }
    const Eigen::VectorXd r = hr_ - gr_ * y;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (!(r[i] > 0.0)) return out;
      out.slacks.push_back(r[i]);
    }
    for (const LevelConstraint* l : poly_.nonlinear_levels) {
      if (!add_piece(l->piece, l->bound, false)) return out;
    }
    out.ok = true;
    if (!derivs) return out;
    out.grad.resize(d + 1);
    out.hess.resize(d + 1, d + 1);
    const Eigen::VectorXd inv_r = r.cwiseInverse();
    out.grad.head(d) = basis_.transpose() * gx - gr_.transpose() * inv_r;
    out.grad[d] = gt;
    out.hess.topLeftCorner(d, d) = basis_.transpose() * hxx * basis_ -
                                   gr_.transpose() * inv_r.cwiseAbs2().asDiagonal() * gr_;
    out.hess.topRightCorner(d, 1) = basis_.transpose() * hxt;
    out.hess.bottomLeftCorner(1, d) = out.hess.topRightCorner(d, 1).transpose();
    out.hess(d, d) = htt;
    return out;
  }

 private:
  const ConcaveProgram& prog_;
  const Polyhedron& poly_;
  Eigen::VectorXd x0_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd gr_;
  Eigen::VectorXd hr_;
};

// Change in the barrier objective, accumulated term by term for accuracy.
double barrier_change(const Barrier::Eval& a, const Barrier::Eval& b, double tau, double dt) {
  double d = tau * dt;
  for (std::size_t i = 0; i < a.slacks.size(); ++i) d += std::log(b.slacks[i] / a.slacks[i]);
  return d;
}

Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hess, const Eigen::VectorXd& grad) {
  Eigen::MatrixXd m = -hess;
  const Eigen::Index k = m.rows();
  double shift = 0.0;
  const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 30; ++attempt) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m + shift * Eigen::MatrixXd::Identity(k, k));
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        (ldlt.vectorD().array() > 0.0).all()) {
      Eigen::VectorXd dir = ldlt.solve(grad);
      if (dir.allFinite()) return dir;
    }
    shift = shift == 0.0 ? 1e-14 * scale : shift * 10.0;
  }
  return grad / scale;
}

// Least-norm correction making the active inequalities and all equalities
// hold with equality.
Eigen::VectorXd snap_to_active(const Polyhedron& poly, const Eigen::VectorXd& x, double active) {
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < poly.g.size(); ++i) {
    if (poly.h[i] - poly.g[i].dot(x) <= active) {
      rows.push_back(poly.g[i]);
      rhs.push_back(poly.h[i]);
    }
  }
  for (std::size_t i = 0; i < poly.a.size(); ++i) {
    rows.push_back(poly.a[i]);
    rhs.push_back(poly.b[i]);
  }
  if (rows.empty()) return x;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), x.size());
  Eigen::VectorXd r(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    a.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    r[static_cast<Eigen::Index>(i)] = rhs[i] - rows[i].dot(x);
  }
  const Eigen::VectorXd dx = a.completeOrthogonalDecomposition().solve(r);
  return x + dx;
}

// Newton's method on the KKT equations of the active set guessed at
// threshold `delta`. Degenerate optima (a piece or row active with a zero
// multiplier) leave the barrier path only O(sqrt(gap)) close; this recovers
// full precision. The result is returned only if it is a verified KKT point,
// hence optimal.
std::optional<Eigen::VectorXd> kkt_polish(const ConcaveProgram& prog, const Polyhedron& poly,
                                          const Eigen::VectorXd& x0, double delta) {
  using Eigen::Index;
  const Index n = x0.size();
  double f0;
  try {
    f0 = prog.objective_value(x0);
  } catch (const ModelError&) {
    return std::nullopt;
  }
  const double fscale = 1.0 + std::abs(f0);
  std::vector<std::size_t> pk, rows, lv;
  for (std::size_t k = 0; k < prog.objective.size(); ++k) {
    if (prog.objective[k].value(x0) - f0 <= delta * fscale) pk.push_back(k);
  }
  for (std::size_t i = 0; i < poly.g.size(); ++i) {
    if (poly.h[i] - poly.g[i].dot(x0) <= delta) rows.push_back(i);
  }
  for (std::size_t j = 0; j < poly.nonlinear_levels.size(); ++j) {
    const LevelConstraint* l = poly.nonlinear_levels[j];
    if (l->piece.value(x0) - l->bound <= delta * (1.0 + std::abs(l->bound))) lv.push_back(j);
  }
  const auto nk = static_cast<Index>(pk.size());
  const auto na = static_cast<Index>(rows.size());
  const auto ne = static_cast<Index>(poly.a.size());
  const auto nl = static_cast<Index>(lv.size());
  const Index iw = n + 1, il = iw + nk, iv = il + na, im = iv + ne;
  const Index size = im + nl;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(size);
  u.head(n) = x0;
  u[n] = f0;
  u.segment(iw, nk).setConstant(1.0 / static_cast<double>(nk));

  auto residual = [&](const Eigen::VectorXd& v, Eigen::MatrixXd* jac) {
    const Eigen::VectorXd x = v.head(n);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(size);
    if (jac) jac->setZero(size, size);
    const Index rs = n, rp = n + 1, ra = rp + nk, re = ra + na, rl = re + ne;
    for (Index k = 0; k < nk; ++k) {
      const PieceValue pv = prog.objective[pk[static_cast<std::size_t>(k)]].eval(x);
      const double w = v[iw + k];
      r.head(n) += w * pv.gradient;
      r[rs] += w;
      r[rp + k] = pv.value - v[n];
      if (jac) {
        jac->topLeftCorner(n, n) += w * pv.hessian;
        jac->block(0, iw + k, n, 1) = pv.gradient;
        (*jac)(rs, iw + k) = 1.0;
        jac->block(rp + k, 0, 1, n) = pv.gradient.transpose();
        (*jac)(rp + k, n) = -1.0;
      }
    }
    r[rs] -= 1.0;
    for (Index i = 0; i < na; ++i) {
      const auto& g = poly.g[rows[static_cast<std::size_t>(i)]];
      r.head(n) -= v[il + i] * g;
      r[ra + i] = g.dot(x) - poly.h[rows[static_cast<std::size_t>(i)]];
      if (jac) {
        jac->block(0, il + i, n, 1) = -g;
        jac->block(ra + i, 0, 1, n) = g.transpose();
      }
    }
    for (Index e = 0; e < ne; ++e) {
      const auto& a = poly.a[static_cast<std::size_t>(e)];
      r.head(n) -= v[iv + e] * a;
      r[re + e] = a.dot(x) - poly.b[static_cast<std::size_t>(e)];
      if (jac) {
        jac->block(0, iv + e, n, 1) = -a;
        jac->block(re + e, 0, 1, n) = a.transpose();
      }
    }
    for (Index j = 0; j < nl; ++j) {
      const LevelConstraint* l = poly.nonlinear_levels[lv[static_cast<std::size_t>(j)]];
      const PieceValue pv = l->piece.eval(x);
      r.head(n) += v[im + j] * pv.gradient;
      r[rl + j] = pv.value - l->bound;
      if (jac) {
        jac->topLeftCorner(n, n) += v[im + j] * pv.hessian;
        jac->block(0, im + j, n, 1) = pv.gradient;
        jac->block(rl + j, 0, 1, n) = pv.gradient.transpose();
      }
    }
    return r;
  };

  double norm = kInf;
  try {
    for (int it = 0; it < 30; ++it) {
      Eigen::MatrixXd jac;
      const Eigen::VectorXd r = residual(u, &jac);
      if (!r.allFinite()) return std::nullopt;
      norm = r.cwiseAbs().maxCoeff();
      if (norm <= 1e-15 * fscale) break;
      const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(-r);
      if (!step.allFinite()) return std::nullopt;
      // Newton steps must stay small: a large move means a wrong active set.
      if (step.head(n).cwiseAbs().maxCoeff() >
          std::max(1e-4, 1e3 * delta) * (1.0 + x0.cwiseAbs().maxCoeff())) {
        return std::nullopt;
      }
      const Eigen::VectorXd next = u + step;
      const double next_norm = residual(next, nullptr).cwiseAbs().maxCoeff();
      u = next;
      if (next_norm >= 0.5 * norm && next_norm <= 1e-12 * fscale) {
        norm = next_norm;
        break;
      }
      norm = next_norm;
    }
  } catch (const ModelError&) {
    return std::nullopt;
  }
  if (!(norm <= 1e-11 * fscale)) return std::nullopt;

  const Eigen::VectorXd x = u.head(n);
  const double dual_tol = -1e-9;
  for (Index k = 0; k < nk; ++k) {
    if (u[iw + k] < dual_tol) return std::nullopt;
  }
  for (Index i = 0; i < na; ++i) {
    if (u[il + i] < dual_tol) return std::nullopt;
  }
  for (Index j = 0; j < nl; ++j) {
    if (u[im + j] < dual_tol) return std::nullopt;
  }
  if (prog.max_violation(x) > 1e-12 * fscale) return std::nullopt;
  for (std::size_t k = 0; k < prog.objective.size(); ++k) {
    if (prog.objective[k].value(x) < u[n] - 1e-12 * fscale) return std::nullopt;
  }
  return x;
}

SolveResult solve_affine(const ConcaveProgram& prog, const Polyhedron& poly) {
  const auto n = static_cast<Eigen::Index>(prog.dim);
  LinearSystem sys(prog.dim + 1);
  for (const ConcavePiece& p : prog.objective) {
    Eigen::VectorXd row(n + 1);
    row << -*p.affine_coeffs, 1.0;
    sys.add_row(row, RowSense::kLessEqual, p.affine_offset);
  }
  for (std::size_t i = 0; i < poly.g.size(); ++i) {
    Eigen::VectorXd row(n + 1);
    row << poly.g[i], 0.0;
    sys.add_row(row, RowSense::kLessEqual, poly.h[i]);
  }
  for (std::size_t i = 0; i < poly.a.size(); ++i) {
    Eigen::VectorXd row(n + 1);
    row << poly.a[i], 0.0;
    sys.add_row(row, RowSense::kEqual, poly.b[i]);
  }
  const LpResult lp = solve_lp(sys, Eigen::VectorXd::Unit(n + 1, n));
  SolveResult res;
  if (lp.status == LpStatus::kInfeasible) {
    res.status = SolveStatus::kInfeasible;
    res.message = "linear constraints infeasible";
    return res;
  }
  if (lp.status == LpStatus::kUnbounded) {
    res.status = SolveStatus::kMaxIterations;
    res.message = "objective unbounded above";
    return res;
  }
  res.status = SolveStatus::kOptimal;
  res.point = lp.x.head(n);
  res.value = prog.objective_value(res.point);
  return res;
}

}  // namespace

SolveResult maximize_concave(const ConcaveProgram& prog, const OptimizerConfig& config) {
  if (prog.objective.empty()) throw ModelError("concave program: empty objective");
  if (static_cast<std::size_t>(prog.lower.size()) != prog.dim ||
      static_cast<std::size_t>(prog.upper.size()) != prog.dim) {
    throw ModelError("concave program: box has the wrong dimension");
  }
  const std::size_t n = prog.dim;
  SolveResult res;
  Polyhedron poly = normalize(prog, config.feasibility_tolerance);
  if (poly.contradictory) {
    res.status = SolveStatus::kInfeasible;
    res.message = "contradictory constant row or empty box";
    return res;
  }

  const bool all_affine =
      poly.nonlinear_levels.empty() &&
      std::all_of(prog.objective.begin(), prog.objective.end(),
                  [](const ConcavePiece& p) { return p.is_affine(); });
  if (all_affine) {
    res = solve_affine(prog, poly);
  } else {
    LpResult p1 = max_slack(poly, n);
    if (p1.status != LpStatus::kOptimal || p1.value < -config.feasibility_tolerance) {
      res.status = SolveStatus::kInfeasible;
      res.message = "linear constraints infeasible";
      return res;
    }
    if (p1.value <= kInteriorSlack) {
      extract_implicit_equalities(poly, n);
      p1 = max_slack(poly, n);
      if (p1.status != LpStatus::kOptimal || p1.value <= 0.0) {
        res.status = SolveStatus::kInfeasible;
        res.message = "no relative interior point";
        return res;
      }
    }
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::VectorXd x_int = p1.x.head(ni);
    const Eigen::MatrixXd basis = null_space(poly, n);
    if (!levels_strict(poly, x_int)) {
      bool found = false;
      if (config.start) {
        const Eigen::VectorXd dir = basis * (basis.transpose() * (*config.start - x_int));
        double theta = 0.5;
        for (int k = 0; k < 60 && !found; ++k, theta *= 0.5) {
          const Eigen::VectorXd x = x_int + (1.0 - theta) * dir;
          if (rows_strict(poly, x) && levels_strict(poly, x)) {
            x_int = x;
            found = true;
          }
        }
      }
      if (!found) {
        res.status = SolveStatus::kInfeasible;
        res.message = "no strictly feasible point for the level constraints";
        return res;
      }
    }

    Barrier barrier(prog, poly, x_int, basis);
    const Eigen::Index d = barrier.free_dim();
    Eigen::VectorXd z = Eigen::VectorXd::Zero(d + 1);
    const double f0 = prog.objective_value(x_int);
    z[d] = f0 - std::max(1.0, std::abs(f0));
    const double terms = static_cast<double>(barrier.terms());
    double tau = 1.0;
    std::size_t iters = 0;
    bool exhausted = false;
    for (int outer = 0; outer < 40 && !exhausted; ++outer) {
      for (int inner = 0; inner < 200; ++inner) {
        if (++iters > config.max_iterations) {
          exhausted = true;
          break;
        }
        const Barrier::Eval cur = barrier.evaluate(z, tau, true);
        if (!cur.ok) break;
        const Eigen::VectorXd dir = newton_direction(cur.hess, cur.grad);
        const double decrement = cur.grad.dot(dir);
        if (!(decrement > 1e-13)) break;
        double alpha = 1.0;
        Barrier::Eval next;
        bool accepted = false;
        for (int ls = 0; ls < 80; ++ls, alpha *= 0.5) {
          const Eigen::VectorXd cand = z + alpha * dir;
          next = barrier.evaluate(cand, tau, false);
          if (!next.ok) continue;
          const double change = barrier_change(cur, next, tau, alpha * dir[d]);
          if (decrement < 0.1 || change >= 0.25 * alpha * decrement) {
            z = cand;
            accepted = true;
            break;
          }
        }
        if (!accepted || decrement < 1e-11) break;
      }
      const double f = prog.objective_value(barrier.point(z));
      if (terms / tau <= config.duality_gap * (1.0 + std::abs(f))) break;
      tau *= 10.0;
    }
    res.iterations = iters;
    res.point = barrier.point(z);
    res.value = prog.objective_value(res.point);
    res.status = exhausted ? SolveStatus::kMaxIterations : SolveStatus::kOptimal;
    if (exhausted) res.message = "iteration limit reached";
    if (config.polish) {
      bool polished = false;
      for (double delta : {1e-11, 1e-9, 1e-7, 1e-5}) {
        const auto x = kkt_polish(prog, poly, res.point, delta);
        if (x && prog.objective_value(*x) >=
                     res.value - 10.0 * config.duality_gap * (1.0 + std::abs(res.value))) {
          res.point = *x;
          res.value = prog.objective_value(*x);
          polished = true;
          break;
        }
      }
      if (!polished) {
        const Eigen::VectorXd snapped = snap_to_active(poly, res.point, config.active_tolerance);
        double v = -kInf;
        try {
          v = prog.objective_value(snapped);
        } catch (const ModelError&) {
        }
        if (prog.max_violation(snapped) <= 1e-3 * config.feasibility_tolerance &&
            v >= res.value - 10.0 * config.duality_gap * (1.0 + std::abs(res.value))) {
          res.point = snapped;
          res.value = v;
        }
      }
    }
  }
  if (res.status == SolveStatus::kInfeasible) return res;
  if (prog.max_violation(res.point) > config.feasibility_tolerance) {
    res.status = SolveStatus::kMaxIterations;
    res.message = fmt::format("final point violates constraints by {:.3g}",
                              prog.max_violation(res.point));
  }
  if (config.certify) {
    certify_kkt(prog, res.point, config, res);
  } else {
    res.certificate_gap = kInf;
  }
  return res;
}

void certify_kkt(const ConcaveProgram& prog, const Eigen::VectorXd& x,
                 const OptimizerConfig& config, SolveResult& result) {
  const auto n = static_cast<Eigen::Index>(prog.dim);
  const double act = config.active_tolerance;
  const double f = prog.objective_value(x);

  std::vector<Eigen::VectorXd> piece_grads;
  std::vector<std::size_t> piece_ids;
  double grad_scale = 1.0;
  for (std::size_t k = 0; k < prog.objective.size(); ++k) {
    const PieceValue pv = prog.objective[k].eval(x);
    if (pv.value - f <= act * (1.0 + std::abs(f))) {
      piece_grads.push_back(pv.gradient);
      piece_ids.push_back(k);
      grad_scale = std::max(grad_scale, pv.gradient.cwiseAbs().maxCoeff());
    }
  }

  // Columns of the multiplier block: (normal, sign class, slack, origin).
  enum class Sign { kNonneg, kFree };
  struct Column {
    Eigen::VectorXd normal;
    Sign sign;
    double slack;
    int kind;  // 0 row, 1 lower, 2 upper, 3 level
    std::size_t index;
  };
  std::vector<Column> cols;
  for (std::size_t i = 0; i < prog.rows.size(); ++i) {
    const auto& r = prog.rows[i];
    const double lhs = r.coeffs.dot(x);
    const double scale = std::max(1.0, r.coeffs.norm());
    switch (r.sense) {
      case RowSense::kLessEqual:
        if (r.rhs - lhs <= act * scale) cols.push_back({r.coeffs, Sign::kNonneg, r.rhs - lhs, 0, i});
        break;
      case RowSense::kGreaterEqual:
        if (lhs - r.rhs <= act * scale) cols.push_back({-r.coeffs, Sign::kNonneg, lhs - r.rhs, 0, i});
        break;
      case RowSense::kEqual: cols.push_back({r.coeffs, Sign::kFree, 0.0, 0, i}); break;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (std::isfinite(prog.lower[j]) && x[j] - prog.lower[j] <= act * std::max(1.0, std::abs(prog.lower[j]))) {
      cols.push_back({-Eigen::VectorXd::Unit(n, j), Sign::kNonneg, x[j] - prog.lower[j], 1, ju});
    }
    if (std::isfinite(prog.upper[j]) && prog.upper[j] - x[j] <= act * std::max(1.0, std::abs(prog.upper[j]))) {
      cols.push_back({Eigen::VectorXd::Unit(n, j), Sign::kNonneg, prog.upper[j] - x[j], 2, ju});
    }
  }
  for (std::size_t j = 0; j < prog.levels.size(); ++j) {
    const PieceValue pv = prog.levels[j].piece.eval(x);
    const double slack = pv.value - prog.levels[j].bound;
    if (slack <= act * (1.0 + std::abs(prog.levels[j].bound))) {
      cols.push_back({-pv.gradient, Sign::kNonneg, slack, 3, j});
    }
  }

  // Variables: w (pieces, >= 0), multipliers (free ones split), r+, r-.
  const auto kp = static_cast<Eigen::Index>(piece_grads.size());
  Eigen::Index km = 0;
  for (const Column& c : cols) km += c.sign == Sign::kFree ? 2 : 1;
  const Eigen::Index nv = kp + km + 2 * n;
  LinearSystem sys(static_cast<std::size_t>(nv));
  for (Eigen::Index v = 0; v < nv; ++v) sys.set_nonnegative(static_cast<std::size_t>(v));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(nv);
    for (Eigen::Index k = 0; k < kp; ++k) row[k] = piece_grads[static_cast<std::size_t>(k)][i];
    Eigen::Index c = kp;
    for (const Column& col : cols) {
      row[c++] = -col.normal[i];
      if (col.sign == Sign::kFree) row[c++] = col.normal[i];
    }
    row[kp + km + i] = -1.0;
    row[kp + km + n + i] = 1.0;
    sys.add_row(row, RowSense::kEqual, 0.0);
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(nv);
  sum.head(kp).setOnes();
  sys.add_row(sum, RowSense::kEqual, 1.0);
  Eigen::VectorXd obj = Eigen::VectorXd::Zero(nv);
  obj.tail(2 * n).setConstant(-1.0);
  const LpResult lp = solve_lp(sys, obj);

  result.row_multipliers = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prog.rows.size()));
  result.lower_multipliers = Eigen::VectorXd::Zero(n);
  result.upper_multipliers = Eigen::VectorXd::Zero(n);
  result.level_multipliers = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prog.levels.size()));
  result.piece_weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prog.objective.size()));
  if (lp.status != LpStatus::kOptimal) {
    result.certificate_gap = kInf;
    return;
  }
  for (Eigen::Index k = 0; k < kp; ++k) {
    result.piece_weights[static_cast<Eigen::Index>(piece_ids[static_cast<std::size_t>(k)])] = lp.x[k];
  }
  Eigen::Index c = kp;
  double comp = 0.0;
  for (const Column& col : cols) {
    double m = lp.x[c++];
    if (col.sign == Sign::kFree) m -= lp.x[c++];
    comp = std::max(comp, std::abs(m * col.slack));
    const auto idx = static_cast<Eigen::Index>(col.index);
    switch (col.kind) {
      case 0: {
        const bool ge = prog.rows[col.index].sense == RowSense::kGreaterEqual;
        result.row_multipliers[idx] = ge ? -m : m;
        break;
      }
      case 1: result.lower_multipliers[idx] = m; break;
      case 2: result.upper_multipliers[idx] = m; break;
      default: result.level_multipliers[idx] = m; break;
    }
  }
  result.certificate_gap = -lp.value;
  result.complementarity_gap = comp;
  if (result.status == SolveStatus::kOptimal &&
      result.certificate_gap > config.stationarity_tolerance * grad_scale) {
    result.status = SolveStatus::kMaxIterations;
    result.message = fmt::format("stationarity residual {:.3g} above tolerance",
                                 result.certificate_gap);
  }
}

SolveResult grid_oracle(const ConcaveProgram& prog, std::size_t resolution, double feasibility) {
  if (resolution == 0) throw ModelError("grid oracle: resolution must be positive");
  const auto n = static_cast<Eigen::Index>(prog.dim);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!std::isfinite(prog.lower[j]) || !std::isfinite(prog.upper[j])) {
      throw ModelError("grid oracle: box must be bounded");
    }
  }
  const double points = std::pow(static_cast<double>(resolution) + 1.0, static_cast<double>(n));
  if (points > kGridPointCap) {
    throw ModelError(fmt::format("grid oracle: {:.3g} points exceed the cap of {:.3g}", points,
                                 kGridPointCap));
  }
  const Eigen::VectorXd step = (prog.upper - prog.lower) / static_cast<double>(resolution);
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd x = prog.lower;
  SolveResult best;
  best.value = -kInf;
  bool any = false;
  std::size_t evaluated = 0;
  while (true) {
    ++evaluated;
    bool feasible = true;
    for (const auto& r : prog.rows) {
      const double lhs = r.coeffs.dot(x);
      const double tol = feasibility * (1.0 + std::abs(r.rhs));
      if ((r.sense == RowSense::kLessEqual && lhs > r.rhs + tol) ||
          (r.sense == RowSense::kGreaterEqual && lhs < r.rhs - tol) ||
          (r.sense == RowSense::kEqual && std::abs(lhs - r.rhs) > tol)) {
        feasible = false;
        break;
      }
    }
    if (feasible) {
      for (const LevelConstraint& l : prog.levels) {
        if (l.piece.value(x) < l.bound - feasibility * (1.0 + std::abs(l.bound))) {
          feasible = false;
          break;
        }
      }
    }
    if (feasible) {
      const double v = prog.objective_value(x);
      if (!any || v > best.value) {
        best.value = v;
        best.point = x;
        any = true;
      }
    }
    Eigen::Index j = 0;
    for (; j < n; ++j) {
      auto& k = idx[static_cast<std::size_t>(j)];
      if (++k <= resolution) {
        x[j] = k == resolution ? prog.upper[j] : prog.lower[j] + static_cast<double>(k) * step[j];
        break;
      }
      k = 0;
      x[j] = prog.lower[j];
    }
    if (j == n) break;
  }
  best.iterations = evaluated;
  if (!any) {
    best.status = SolveStatus::kInfeasible;
    best.message = "no feasible grid point";
    return best;
  }
  best.status = SolveStatus::kOptimal;
  best.certificate_gap = prog.lipschitz ? *prog.lipschitz * step.maxCoeff() : kInf;
  return best;
}

double midpoint_concavity_violation(const ConcaveProgram& prog, std::size_t samples,
                                    std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(prog.dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&] {
    Eigen::VectorXd x(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      x[j] = prog.lower[j] + unit(rng) * (prog.upper[j] - prog.lower[j]);
    }
    return x;
  };
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Eigen::VectorXd a = draw();
    const Eigen::VectorXd b = draw();
    const double gap = 0.5 * (prog.objective_value(a) + prog.objective_value(b)) -
                       prog.objective_value(0.5 * (a + b));
    worst = std::max(worst, gap);
  }
  return worst;
}

}  // namespace kw
