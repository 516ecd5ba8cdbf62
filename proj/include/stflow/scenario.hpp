#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stflow/config.hpp"
#include "stflow/lfde.hpp"
#include "stflow/measures.hpp"
#include "stflow/report.hpp"
#include "stflow/spacetime.hpp"
#include "stflow/uniformize.hpp"

namespace stflow {

// The stepper could not advance even after exhausting the step-halving budget.
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs the flow through the target times; on a failed Newton solve the step
// bound is halved and the whole run retried, at most max_halvings times.
Trajectory run_flow_adaptive(const FlowState& f0, const std::vector<double>& times,
                             double tau, int max_halvings = 20,
                             double* tau_used = nullptr);

struct ScenarioArtifacts {
  std::string scenario;
  bool expected_fail = false;
  Mask domain;  // flow-domain mask (meaningful when a flow ran)
  std::optional<SpacetimeDomain> spacetime;
  std::optional<Trajectory> trajectory;
  std::optional<DiscreteMeasure> measure;
  std::vector<VerificationReport> reports;
};

// True iff every report with a definite verdict passes (NotApplicable reports
// do not count against the run).
bool all_checks_pass(const std::vector<VerificationReport>& reports);

// Builds the domain/flow/checks described by the config, runs them, and
// returns everything produced. Throws ConfigError for invalid configs and
// SolverFailure when stepping cannot proceed.
ScenarioArtifacts run_experiment(const ExperimentConfig& cfg);

// Writes trajectory, masks, spacetime, measure, reports, and a one-line-per-
// check summary under out_dir; returns the path of the reports file.
std::string write_artifacts(const ScenarioArtifacts& a, const std::string& out_dir);

}  // namespace stflow
