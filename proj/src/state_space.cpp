#include "kw/state_space.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "kw/linear_program.hpp"

namespace kw {

void require_same_size(const Plan& a, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(a.size()) != n) {
    throw ModelError(fmt::format("{}: expected {} states, got {}", what, n, a.size()));
  }
}

PriorSet PriorSet::from_vertices(std::vector<Plan> vertices, double tolerance) {
  if (vertices.empty()) throw ModelError("prior set: no vertices");
  if (!(tolerance >= 0.0)) throw ModelError("prior set: negative tolerance");
  const auto n = static_cast<std::size_t>(vertices.front().size());
  if (n == 0) throw ModelError("prior set: zero states");
  std::vector<Plan> unique;
  for (std::size_t k = 0; k < vertices.size(); ++k) {
    const Plan& p = vertices[k];
    require_same_size(p, n, "prior set vertex");
    for (Eigen::Index w = 0; w < p.size(); ++w) {
      if (!std::isfinite(p[w])) {
        throw ModelError(fmt::format("prior set: vertex {} has a non-finite entry", k));
      }
      if (p[w] <= 0.0) {
        throw ModelError(fmt::format(
            "prior set: vertex {} has entry {} <= 0 in state {} (priors need full support)", k,
            p[w], w));
      }
    }
    if (std::abs(p.sum() - 1.0) > tolerance) {
      throw ModelError(fmt::format("prior set: vertex {} sums to {}, not 1", k, p.sum()));
    }
    const bool dup = std::any_of(unique.begin(), unique.end(), [&](const Plan& q) {
      return (q - p).cwiseAbs().maxCoeff() <= tolerance;
    });
    if (!dup) unique.push_back(p);
  }
  return PriorSet(std::move(unique), tolerance, false);
}

PriorSet PriorSet::interval(const Plan& center, double epsilon, double tolerance) {
  const auto n = static_cast<std::size_t>(center.size());
  if (n == 0) throw ModelError("interval priors: empty center");
  if (!(epsilon >= 0.0)) throw ModelError("interval priors: epsilon must be >= 0");
  std::vector<Plan> vertices;
  if (epsilon == 0.0 || n == 1) {
    vertices.push_back(center);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        Plan p = center;
        p[static_cast<Eigen::Index>(i)] -= epsilon;
        p[static_cast<Eigen::Index>(j)] += epsilon;
        vertices.push_back(std::move(p));
      }
    }
  }
  return from_vertices(std::move(vertices), tolerance);
}

PriorSet PriorSet::full_simplex(std::size_t states) {
  if (states == 0) throw ModelError("full simplex: zero states");
  std::vector<Plan> vertices;
  for (std::size_t w = 0; w < states; ++w) {
    vertices.push_back(Plan::Unit(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(w)));
  }
  return PriorSet(std::move(vertices), kDefaultPriorTolerance, true);
}

Plan PriorSet::centroid() const {
  Plan c = Plan::Zero(static_cast<Eigen::Index>(num_states()));
  for (const Plan& p : vertices_) c += p;
  return c / static_cast<double>(vertices_.size());
}

bool PriorSet::contains(const Plan& p, double tol) const {
  require_same_size(p, num_states(), "prior membership");
  const std::size_t k = size();
  LinearSystem sys(k);
  for (std::size_t j = 0; j < k; ++j) sys.set_nonnegative(j);
  for (std::size_t w = 0; w < num_states(); ++w) {
    Eigen::VectorXd row(static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) {
      row[static_cast<Eigen::Index>(j)] = vertices_[j][static_cast<Eigen::Index>(w)];
    }
    sys.add_row(row, RowSense::kEqual, p[static_cast<Eigen::Index>(w)]);
  }
  sys.add_row(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k)), RowSense::kEqual, 1.0);
  return lp_feasibility(sys, tol).feasible;
}

StatePrice::StatePrice(Plan values) : values_(std::move(values)) {
  if (values_.size() == 0) throw ModelError("state price: empty");
  for (Eigen::Index w = 0; w < values_.size(); ++w) {
    if (!std::isfinite(values_[w]) || values_[w] < 0.0) {
      throw ModelError(fmt::format("state price: entry {} in state {} is not >= 0", values_[w], w));
    }
  }
}

StatePrice StatePrice::uniform(std::size_t states) {
  const auto n = static_cast<Eigen::Index>(states);
  return StatePrice(Plan::Constant(n, 1.0 / static_cast<double>(states)));
}

bool StatePrice::is_canonical(double tol) const { return std::abs(values_.sum() - 1.0) <= tol; }

StatePrice StatePrice::canonical() const {
  const double s = values_.sum();
  if (s <= 0.0) throw ModelError("state price: the zero price has no canonical form");
  return StatePrice(values_ / s);
}

ExpectationValue sublinear_expectation(const PriorSet& priors, const Plan& x) {
  require_same_size(x, priors.num_states(), "sublinear expectation");
  ExpectationValue best{priors.vertex(0).dot(x), 0};
  for (std::size_t k = 1; k < priors.size(); ++k) {
    const double v = priors.vertex(k).dot(x);
    if (v > best.value) best = {v, k};
  }
  return best;
}

ExpectationValue lower_expectation(const PriorSet& priors, const Plan& x) {
  require_same_size(x, priors.num_states(), "lower expectation");
  ExpectationValue best{priors.vertex(0).dot(x), 0};
  for (std::size_t k = 1; k < priors.size(); ++k) {
    const double v = priors.vertex(k).dot(x);
    if (v < best.value) best = {v, k};
  }
  return best;
}

double price(const StatePrice& psi, const PriorSet& priors, const Plan& x) {
  require_same_size(psi.values(), priors.num_states(), "price");
  require_same_size(x, priors.num_states(), "price");
  return sublinear_expectation(priors, psi.values().cwiseProduct(x)).value;
}

double expectation_spread(const PriorSet& priors, const Plan& xi) {
  return sublinear_expectation(priors, xi).value - lower_expectation(priors, xi).value;
}

bool is_mean_ambiguity_free(const PriorSet& priors, const Plan& xi, double tol) {
  return expectation_spread(priors, xi) <= tol;
}

namespace {

struct ReducedRows {
  Eigen::MatrixXd rref;                // rank x n, pivot entries equal to one
  std::vector<Eigen::Index> pivots;    // pivot column per row
};

ReducedRows row_reduce(Eigen::MatrixXd a) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  std::vector<Eigen::Index> pivots;
  Eigen::Index r = 0;
  for (Eigen::Index c = 0; c < cols && r < rows; ++c) {
    Eigen::Index best = r;
    for (Eigen::Index i = r + 1; i < rows; ++i) {
      if (std::abs(a(i, c)) > std::abs(a(best, c))) best = i;
    }
    if (std::abs(a(best, c)) <= kKernelPivotTolerance) {
      a.col(c).tail(rows - r).setZero();
      continue;
    }
    a.row(r).swap(a.row(best));
    a.row(r) /= a(r, c);
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (i != r && a(i, c) != 0.0) a.row(i) -= a(i, c) * a.row(r);
    }
    pivots.push_back(c);
    ++r;
  }
  return {a.topRows(r), pivots};
}

// Scales v by the smallest integer multiplier (<= 1000) that makes every
// entry integral; otherwise normalizes the largest entry to one.
Plan integer_friendly(Plan v) {
  const double big = v.cwiseAbs().maxCoeff();
  if (big == 0.0) return v;
  v /= big;
  for (int m = 1; m <= 1000; ++m) {
    const Plan s = v * static_cast<double>(m);
    const Plan r = s.array().round().matrix();
    if ((s - r).cwiseAbs().maxCoeff() <= 1e-9 * static_cast<double>(m)) {
      v = r;
      break;
    }
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  return v;
}

Eigen::MatrixXd difference_matrix(const PriorSet& priors) {
  const auto n = static_cast<Eigen::Index>(priors.num_states());
  const auto k = static_cast<Eigen::Index>(priors.size());
  Eigen::MatrixXd d(std::max<Eigen::Index>(k - 1, 1), n);
  d.setZero();
  for (Eigen::Index i = 1; i < k; ++i) {
    d.row(i - 1) = (priors.vertex(static_cast<std::size_t>(i)) - priors.vertex(0)).transpose();
  }
  return d;
}

}  // namespace

SubspaceBasis mean_ambiguity_free_basis(const PriorSet& priors) {
  const auto n = static_cast<Eigen::Index>(priors.num_states());
  const ReducedRows red = row_reduce(difference_matrix(priors));
  std::vector<bool> is_pivot(static_cast<std::size_t>(n), false);
  for (auto c : red.pivots) is_pivot[static_cast<std::size_t>(c)] = true;

  SubspaceBasis out;
  for (Eigen::Index f = 0; f < n; ++f) {
    if (is_pivot[static_cast<std::size_t>(f)]) continue;
    Plan v = Plan::Zero(n);
    v[f] = 1.0;
    for (std::size_t r = 0; r < red.pivots.size(); ++r) {
      v[red.pivots[r]] = -red.rref(static_cast<Eigen::Index>(r), f);
    }
    out.basis_vectors.push_back(integer_friendly(std::move(v)));
  }
  return out;
}

std::vector<Plan> ambiguity_constraint_rows(const PriorSet& priors) {
  const ReducedRows red = row_reduce(difference_matrix(priors));
  std::vector<Plan> rows;
  for (Eigen::Index r = 0; r < red.rref.rows(); ++r) {
    rows.push_back(red.rref.row(r).transpose());
  }
  return rows;
}

bool SubspaceBasis::contains(const Plan& x, double tol) const {
  if (basis_vectors.empty()) return x.cwiseAbs().maxCoeff() <= tol;
  Eigen::MatrixXd b(x.size(), static_cast<Eigen::Index>(basis_vectors.size()));
  for (std::size_t j = 0; j < basis_vectors.size(); ++j) {
    b.col(static_cast<Eigen::Index>(j)) = basis_vectors[j];
  }
  const Eigen::VectorXd coef = b.colPivHouseholderQr().solve(x);
  return (b * coef - x).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace kw
