#ifndef MEANDISP_SELECTION_HPP
#define MEANDISP_SELECTION_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "meandisp/joint.hpp"
#include "meandisp/terms.hpp"

namespace meandisp {

enum class MeanCriterion { r2_tilde, eaic };
enum class DispCriterion { r2_tilde, aicc };

struct CriterionSpec {
  MeanCriterion mean_kind = MeanCriterion::r2_tilde;
  Penalty mean_penalty = Penalty::sqrt_n;
  DispCriterion disp_kind = DispCriterion::r2_tilde;
  Penalty disp_penalty = Penalty::one;
};

struct SelectionConfig {
  explicit SelectionConfig(TermSet candidate_pool)
      : pool(std::move(candidate_pool)) {}

  double alpha = 0.10;
  CriterionSpec criterion{};
  // Candidate terms (mixture-by-process products). Main effects and the
  // constant are filtered per the outcome of the constant-term test.
  TermSet pool;
  int max_terms = 0;  // cap per component, 0 = unbounded
  int max_iterations = 10;
  JointConfig joint{};
};

// One candidate term tried at one forward step.
struct CandidateEval {
  std::string term;
  double criterion = 0.0;
  bool failed = false;
  std::string note;
};

// One forward-selection decision: the best-ranked candidate and the
// accept/stop outcome for it.
struct StepRecord {
  std::string model;  // candidate model under decision
  std::string added_term;
  std::vector<CandidateEval> candidates;
  double criterion = 0.0;
  double r2_lambda = 0.0;  // component R~2 at the configured penalty
  double r2_one = 0.0;     // same with lambda = 1
  double dev = 0.0;        // D* (mean) or gamma deviance D (dispersion)
  TestResult test;
  bool criterion_improved = false;
  bool significant = false;
  bool accepted = false;
  bool lookahead = false;  // accepted on significance after the criterion
                           // stopped improving (then selection ends)
};

// The Algorithm-3 run of one component within one outer iteration.
struct ComponentRun {
  std::string component;  // "mean" or "dispersion"
  bool assumed_constant = false;  // iteration 1 has no dispersion run
  bool initial_test_run = false;
  TestResult initial_test;
  bool use_constant = false;
  std::string initial_model;
  double initial_criterion = 0.0;
  double initial_r2_lambda = 0.0;
  double initial_r2_one = 0.0;
  double initial_dev = 0.0;
  std::vector<StepRecord> steps;
  std::string final_model;
  double final_criterion = 0.0;
  std::string note;
};

struct IterationRecord {
  int index = 1;
  ComponentRun dispersion;
  ComponentRun mean;
};

struct SelectionTrace {
  std::vector<IterationRecord> iterations;
  int chosen_iteration = 0;  // 1-based; the kept (mean, dispersion) pair
  std::string stop_reason;
};

struct ConstantTestResult {
  bool use_constant = false;
  TestResult test;
};

// Tests H0: all mixture main-effect coefficients equal, by comparing the
// intercept-only model with the slack form {1, x_1..x_{a-1}} (which spans
// the full main-effect model on the simplex). The comparison is the
// fixed-dispersion deviance chi-square on a-1 df: the per-observation
// dispersions are already carried by the prior weights, so the weighted
// deviance difference needs no residual scale estimate. An estimated-scale
// F here would lose its power to unmodeled interaction structure, which
// inflates the residual scale of both fits. use_constant = (p > alpha).
ConstantTestResult constant_term_test_mean(const DesignTable& design,
                                           const Eigen::VectorXd& y,
                                           const Eigen::VectorXd& phi,
                                           const SelectionConfig& cfg);

// Same hypothesis for the dispersion submodel via the deviance chi-square.
// response holds the standardized-deviance ratios d*_i / phi_i produced by
// the current mean fit.
ConstantTestResult constant_term_test_disp(const DesignTable& design,
                                           const Eigen::VectorXd& response,
                                           const SelectionConfig& cfg);

struct ComponentResult {
  TermSet terms;
  GlmFit fit;
  ComponentRun run;
  double score = 0.0;  // criterion on a higher-is-better scale
};

// Forward selection of the mean submodel under fixed per-observation phi.
// q_other is the current dispersion model size (enters the EAIC penalty).
ComponentResult select_mean_terms(const DesignTable& design,
                                  const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& phi, int q_other,
                                  const SelectionConfig& cfg);

// Forward selection of the dispersion submodel conditioned on a mean fit.
// The gamma response is d*_i / phi_prev_i, the scale under which the mean
// fit was weighted; its fitted values become the next phi directly. The
// candidate pool keeps only blend terms up to pairwise products (no process
// variables, no cubic blending).
ComponentResult select_disp_terms(const DesignTable& design,
                                  const GlmFit& mean_fit,
                                  const Eigen::VectorXd& phi_prev,
                                  const SelectionConfig& cfg);

struct JointSelectionResult {
  TermSet mean_terms;
  TermSet disp_terms;
  JointFit fit;  // the kept iteration's state
  SelectionTrace trace;
};

// Alternating selection: iteration 1 selects the mean under phi = 1 with the
// dispersion assumed constant; each later iteration reselects the dispersion
// and then the mean. Stops when the mean criterion no longer improves and
// keeps the models of the previous iteration. Iteration 1's criterion is
// excluded from that comparison (it is computed under the assumed unit
// dispersion, not a fitted one), so a run with max_iterations >= 2 always
// carries a fitted dispersion model.
JointSelectionResult select_joint(const DesignTable& design,
                                  const Eigen::VectorXd& y,
                                  const SelectionConfig& cfg);

// Scheffe full-cubic mixture terms crossed with quadratic process monomials;
// the default candidate pool.
TermSet default_candidate_pool(const VariableSet& vars);

}  // namespace meandisp

#endif
