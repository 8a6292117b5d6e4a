#ifndef KW_STATE_SPACE_HPP
#define KW_STATE_SPACE_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kw {

// A contingent plan: one real number per state (consumption units, or price
// units when it carries a state price).
using Plan = Eigen::VectorXd;

// Raised for malformed model input: bad priors, endowments, preference specs.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kDefaultPriorTolerance = 1e-9;
inline constexpr double kMeanAmbiguityTolerance = 1e-9;
inline constexpr double kKernelPivotTolerance = 1e-10;

// Convex compact set of priors, stored as the vertex list of a polytope.
//
// Every vertex has full support. The one exception is the closure of the
// whole simplex (all Dirac measures), which is flagged and waives the
// positivity check.
class PriorSet {
 public:
  // Validates and deduplicates. Throws ModelError on zero/negative entries,
  // sums off by more than `tolerance`, or mismatched lengths.
  static PriorSet from_vertices(std::vector<Plan> vertices,
                                double tolerance = kDefaultPriorTolerance);

  // The polytope center + epsilon * conv{e_j - e_i : i != j}. For two states
  // this is {p : p_1 in [c_1 - eps, c_1 + eps]}. epsilon = 0 gives {center}.
  static PriorSet interval(const Plan& center, double epsilon,
                           double tolerance = kDefaultPriorTolerance);

  // The full simplex, represented by its Dirac vertices.
  static PriorSet full_simplex(std::size_t states);

  std::size_t num_states() const { return static_cast<std::size_t>(vertices_.front().size()); }
  std::size_t size() const { return vertices_.size(); }
  const Plan& vertex(std::size_t k) const { return vertices_.at(k); }
  const std::vector<Plan>& vertices() const { return vertices_; }
  double tolerance() const { return tolerance_; }
  bool is_closure() const { return closure_; }
  bool is_singleton() const { return vertices_.size() == 1; }
  Plan centroid() const;

  // True when p lies in the convex hull of the vertices (checked by LP).
  bool contains(const Plan& p, double tol = 1e-9) const;

 private:
  PriorSet(std::vector<Plan> vertices, double tolerance, bool closure)
      : vertices_(std::move(vertices)), tolerance_(tolerance), closure_(closure) {}

  std::vector<Plan> vertices_;
  double tolerance_;
  bool closure_;
};

// Nonnegative per-state price. The canonical representative lies in the
// simplex; budget sets are homogeneous of degree zero in the price.
class StatePrice {
 public:
  explicit StatePrice(Plan values);
  static StatePrice uniform(std::size_t states);

  const Plan& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t w) const { return values_[static_cast<Eigen::Index>(w)]; }
  bool is_zero() const { return values_.sum() == 0.0; }
  bool is_canonical(double tol = 1e-12) const;
  // Rescaled to sum one. Throws ModelError for the zero price.
  StatePrice canonical() const;

 private:
  Plan values_;
};

struct ExpectationValue {
  double value = 0.0;
  std::size_t vertex = 0;  // maximizing (or minimizing) vertex index
};

// max over priors of E^P[x]; ties go to the lowest vertex index.
ExpectationValue sublinear_expectation(const PriorSet& priors, const Plan& x);
// min over priors of E^P[x] = -sublinear_expectation(-x).
ExpectationValue lower_expectation(const PriorSet& priors, const Plan& x);

// Coherent forward price of x: the sublinear expectation of psi * x.
double price(const StatePrice& psi, const PriorSet& priors, const Plan& x);

// x has the same expectation under every prior (spread <= tol).
bool is_mean_ambiguity_free(const PriorSet& priors, const Plan& xi,
                            double tol = kMeanAmbiguityTolerance);
// max_P E^P xi - min_P E^P xi.
double expectation_spread(const PriorSet& priors, const Plan& xi);

struct SubspaceBasis {
  std::vector<Plan> basis_vectors;
  std::size_t dimension() const { return basis_vectors.size(); }
  bool contains(const Plan& x, double tol = 1e-9) const;
};

// Basis of the subspace of mean-ambiguity-free plans: the kernel of the
// matrix with rows P_k - P_1. Computed by Gauss-Jordan elimination with
// partial pivoting; pivots below kKernelPivotTolerance count as zero. Basis
// vectors are scaled to small integers when their entries are rational.
SubspaceBasis mean_ambiguity_free_basis(const PriorSet& priors);

// Independent rows spanning the orthogonal complement of that subspace;
// x is mean-ambiguity free iff every row annihilates x.
std::vector<Plan> ambiguity_constraint_rows(const PriorSet& priors);

void require_same_size(const Plan& a, std::size_t n, const char* what);

}  // namespace kw

#endif  // KW_STATE_SPACE_HPP
