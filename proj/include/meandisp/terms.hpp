#ifndef MEANDISP_TERMS_HPP
#define MEANDISP_TERMS_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace meandisp {

// Variables of a mixture-process experiment: `a` mixture components whose
// proportions sum to one on every run, plus `r` process (noise) variables.
struct VariableSet {
  std::vector<std::string> mixture;
  std::vector<std::string> process;

  int n_mixture() const { return static_cast<int>(mixture.size()); }
  int n_process() const { return static_cast<int>(process.size()); }
  int mixture_index(const std::string& name) const;
  int process_index(const std::string& name) const;
  bool operator==(const VariableSet&) const = default;

  // x1..xa and z1..zr.
  static VariableSet standard(int a, int r);
};

// One model term: a monomial in the mixture and process variables, with an
// optional (x_i - x_j) factor for the cubic difference terms of the full
// Scheffe polynomial. The constant term has all exponents zero.
struct Term {
  std::vector<int> mix_exp;
  std::vector<int> proc_exp;
  int diff_i = -1;
  int diff_j = -1;

  bool has_diff() const { return diff_i >= 0; }
  bool is_constant() const;
  bool is_mixture_main() const;  // a single x_i to the first power
  int mixture_degree() const;    // counts the difference factor as one
  int process_degree() const;
  double eval(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& z) const;

  static Term constant(const VariableSet& vars);
  static Term mixture_main(const VariableSet& vars, int i);

  bool operator==(const Term&) const = default;
};

// Total order implementing the canonical term ordering: process monomial
// first (constant block, then z blocks), then the mixture shape within the
// block (mains by index, squares by index, two-way products lexicographically,
// difference terms, triples, anything else by degree).
bool term_less(const Term& a, const Term& b);

std::string term_to_string(const Term& t, const VariableSet& vars);
Term parse_term(const std::string& text, const VariableSet& vars);

// An ordered, duplicate-free set of terms over a fixed variable set, kept in
// canonical order.
class TermSet {
 public:
  explicit TermSet(VariableSet vars) : vars_(std::move(vars)) {}

  const VariableSet& variables() const { return vars_; }
  const std::vector<Term>& terms() const { return terms_; }
  int size() const { return static_cast<int>(terms_.size()); }
  bool empty() const { return terms_.empty(); }

  // Returns false when the term is already present.
  bool insert(const Term& t);
  bool contains(const Term& t) const;
  bool contains_constant() const;
  TermSet with(const Term& t) const;
  TermSet without(const Term& t) const;
  bool subset_of(const TermSet& other) const;
  bool operator==(const TermSet& other) const;

  std::vector<std::string> names() const;
  std::string to_string(const std::string& sep = " + ") const;

  // Parses a '+' or ',' separated list of terms in the grammar of
  // term_to_string, e.g. "x1, x2, x3, x1*z2, x1*x2*(x1-x2)".
  static TermSet parse(const std::string& text, const VariableSet& vars);

 private:
  VariableSet vars_;
  std::vector<Term> terms_;
};

enum class ScheffeDegree { linear, quadratic, special_cubic, full_cubic };

// Scheffe mixture polynomials. None of them contain a constant term; the
// linear blend takes that role on the simplex.
TermSet scheffe_terms(const VariableSet& vars, ScheffeDegree degree);

enum class SlackDegree { linear, quadratic };

// Slack-variable reparametrization: drop one component and model the rest
// with an ordinary polynomial including the constant. The quadratic form of
// a q-component mixture spans the same space as the Scheffe quadratic.
TermSet slack_model(const VariableSet& vars, int drop_index, SlackDegree degree);

// All pairwise products of a mixture set with a set of process monomials
// (which may include the constant), deduplicated, in canonical order.
TermSet cross(const TermSet& mixture_terms, const TermSet& process_terms);

// Process-variable monomial sets used to build candidate pools. Candidate
// pools treat each noise variable as a first-order effect, so the quadratic
// set adds cross products of distinct variables but never pure powers (with
// two-level coding z^2 would alias the constant anyway); squared terms can
// still be written explicitly in term lists.
TermSet process_monomials_linear(const VariableSet& vars);     // {1, z_j}
TermSet process_monomials_quadratic(const VariableSet& vars);  // + {z_i z_j}

// Design points: mixture proportions and process settings for each run.
struct DesignTable {
  VariableSet vars;
  Eigen::MatrixXd mixture;  // n x a
  Eigen::MatrixXd process;  // n x r, zero columns allowed

  DesignTable(VariableSet v, Eigen::MatrixXd mix, Eigen::MatrixXd proc,
              double sum_tol = 1e-12);
  int n_runs() const { return static_cast<int>(mixture.rows()); }
};

// {m+a-1 choose a-1} lattice points: all proportions k/m summing to one.
DesignTable simplex_lattice(const VariableSet& vars, int m);

// The 2^a - 1 centroids of all nonempty vertex subsets, ordered by subset
// size then lexicographically.
DesignTable simplex_centroid(const VariableSet& vars);

// Model matrix with one column per term, in the set's canonical order.
Eigen::MatrixXd model_matrix(const TermSet& terms, const DesignTable& design);

}  // namespace meandisp

#endif
