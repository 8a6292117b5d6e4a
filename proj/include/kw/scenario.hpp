#ifndef KW_SCENARIO_HPP
#define KW_SCENARIO_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kw/analysis.hpp"

namespace kw {

using Json = nlohmann::ordered_json;

// Malformed scenario or candidate file; the message names the field path.
class ScenarioError : public ModelError {
 public:
  using ModelError::ModelError;
};

struct PriorSpec {
  enum class Kind { kVertices, kInterval, kSimplex };
  Kind kind = Kind::kInterval;
  std::vector<Plan> vertices;
  Plan center;
  double epsilon = 0.0;
};

struct ExperimentSpec {
  std::vector<double> grid;
  std::size_t draws = 100;
  std::uint64_t seed = 7;
  bool constant_shares = false;
  // Prior of the linear economy; the centroid of the prior set when absent.
  std::optional<Plan> prior;
};

struct Scenario {
  std::size_t states = 0;
  PriorSpec priors;
  std::vector<Agent> agents;
  Clearing clearing = Clearing::kFreeDisposal;
  SolverConfig solver;
  std::optional<ExperimentSpec> experiment;

  PriorSet prior_set() const;
  // Interval family around the scenario's center; throws for other kinds.
  PriorSet prior_family(double epsilon) const;
  Economy economy() const;
};

// Strict: unknown fields, wrong types and invalid economies are rejected.
Scenario parse_scenario(const Json& doc);
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario(const std::string& path);

// Canonical form with every field present.
Json to_json(const Scenario& scenario);

// FNV-1a 64 of the canonical compact dump, as 16 hex digits.
std::string digest(const Scenario& scenario);

Json to_json(const Equilibrium& eq);
Json to_json(const VerificationReport& report);
Json to_json(const NoTradeCertificate& cert);

struct CandidateFile {
  StatePrice psi = StatePrice::uniform(1);
  std::vector<Plan> allocation;
};

// Accepts {"psi": [...], "allocation": [[...], ...]} or a solve report.
CandidateFile parse_candidate(const Json& doc, std::size_t states, std::size_t agents);

// 17 significant digits, so the text reads back to the same double.
std::string format_number(double x);

// Sweep CSV: one row per record, columns fixed by the state and agent count.
std::string sweep_csv(const std::vector<SweepRecord>& records, std::size_t states, std::size_t agents);
std::string sample_csv(const GenericityResult& result, std::size_t states, std::size_t agents);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace kw

#endif  // KW_SCENARIO_HPP
