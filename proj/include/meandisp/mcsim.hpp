#ifndef MEANDISP_MCSIM_HPP
#define MEANDISP_MCSIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "meandisp/dataset.hpp"
#include "meandisp/selection.hpp"

namespace meandisp {

// The data-generating joint model of the simulation study.
struct TruthSpec {
  VariableSet vars;
  TermSet mean_terms;
  Eigen::VectorXd mean_coefs;
  TermSet disp_terms;
  Eigen::VectorXd disp_coefs;

  // Three mixture components and one two-level noise variable; mean
  // 15 x1 + 15 x2 + 10 x3 + 35 x1 x3 + 25 x3 z1 and log dispersion
  // 0.4 x1 + 0.5 x2 + 0.5 x3 + 3.5 x1 x3.
  static TruthSpec defaults();
};

// splitmix64 step; chains (master seed, scenario, replication) into
// independent generator seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Simplex-centroid design crossed with z = -1, +1 (14 base runs), stacked
// `replicates` times; responses drawn Normal(mu_i, variance phi_i).
Dataset generate_dataset(const TruthSpec& truth, int replicates,
                         std::uint64_t seed);

enum class Outcome { correct, type1, type2 };

// On the simplex the constant equals the sum of the mixture mains, so a
// selected constant is rewritten as the full main-effect set before
// comparing term sets.
TermSet expand_constant(const TermSet& terms);

// Correct: exact match after constant expansion. Type2: omits a true term.
// Type1: all true terms present plus extras.
Outcome classify_component(const TermSet& selected, const TermSet& truth);

// Joint rule over both components: Correct needs both exact; any omission is
// Type2; otherwise Type1.
Outcome classify(const TermSet& selected_mean, const TermSet& selected_disp,
                 const TruthSpec& truth);

struct McCell {
  std::string mean_criterion;
  std::string disp_criterion;
  int replicates = 0;
  int n = 0;
  int n_mc = 0;
  int failures = 0;
  double correct = 0.0, type1 = 0.0, type2 = 0.0;
  // Per-component tallies, reported alongside the joint rule.
  double mean_correct = 0.0, mean_type1 = 0.0, mean_type2 = 0.0;
  double disp_correct = 0.0, disp_type1 = 0.0, disp_type2 = 0.0;
};

struct McReport {
  std::uint64_t master_seed = 0;
  int n_mc = 0;
  double alpha = 0.10;
  std::vector<McCell> cells;
  bool failure_flag = false;  // some cell failed more than 1% of replications
};

struct StudyConfig {
  std::vector<CriterionSpec> criterion_pairs;
  std::vector<int> replicate_counts;  // 2, 4, 7, 11 in the study
  int n_mc = 1000;
  std::uint64_t master_seed = 20190604;
  double alpha = 0.10;
  int jobs = 1;
};

std::string criterion_pair_label_mean(const CriterionSpec& spec);
std::string criterion_pair_label_disp(const CriterionSpec& spec);

// Runs select_joint on every generated dataset and tallies the outcome
// classes. Replications are farmed out to `jobs` workers; per-replication
// seeds depend only on (master seed, replicate count, replication index), so
// the report is byte-identical for any worker count. Selection failures are
// excluded from the proportions and counted per cell.
McReport run_study(const TruthSpec& truth, const StudyConfig& config);

// Table-style CSV: one row per (criterion pair, outcome class), one column
// per sample size.
std::string mcreport_to_csv(const McReport& report);

}  // namespace meandisp

#endif
