#include "meandisp/terms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "meandisp/errors.hpp"

namespace meandisp {

int VariableSet::mixture_index(const std::string& name) const {
  for (int i = 0; i < n_mixture(); ++i) {
    if (mixture[i] == name) return i;
  }
  return -1;
}

int VariableSet::process_index(const std::string& name) const {
  for (int j = 0; j < n_process(); ++j) {
    if (process[j] == name) return j;
  }
  return -1;
}

VariableSet VariableSet::standard(int a, int r) {
  VariableSet v;
  for (int i = 1; i <= a; ++i) v.mixture.push_back("x" + std::to_string(i));
  for (int j = 1; j <= r; ++j) v.process.push_back("z" + std::to_string(j));
  return v;
}

bool Term::is_constant() const {
  if (has_diff()) return false;
  for (int e : mix_exp) {
    if (e != 0) return false;
  }
  for (int e : proc_exp) {
    if (e != 0) return false;
  }
  return true;
}

bool Term::is_mixture_main() const {
  if (has_diff() || process_degree() != 0) return false;
  int ones = 0;
  for (int e : mix_exp) {
    if (e == 1) {
      ++ones;
    } else if (e != 0) {
      return false;
    }
  }
  return ones == 1;
}

int Term::mixture_degree() const {
  int d = has_diff() ? 1 : 0;
  for (int e : mix_exp) d += e;
  return d;
}

int Term::process_degree() const {
  int d = 0;
  for (int e : proc_exp) d += e;
  return d;
}

double Term::eval(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& z) const {
  double v = 1.0;
  for (size_t i = 0; i < mix_exp.size(); ++i) {
    for (int k = 0; k < mix_exp[i]; ++k) v *= x(static_cast<int>(i));
  }
  if (has_diff()) v *= x(diff_i) - x(diff_j);
  for (size_t j = 0; j < proc_exp.size(); ++j) {
    for (int k = 0; k < proc_exp[j]; ++k) v *= z(static_cast<int>(j));
  }
  return v;
}

Term Term::constant(const VariableSet& vars) {
  Term t;
  t.mix_exp.assign(vars.n_mixture(), 0);
  t.proc_exp.assign(vars.n_process(), 0);
  return t;
}

Term Term::mixture_main(const VariableSet& vars, int i) {
  Term t = constant(vars);
  t.mix_exp[i] = 1;
  return t;
}

namespace {

// Shape rank for one side of a term. Lower ranks come first: constant, main
// effects by index, squares by index, distinct pairs lexicographically,
// difference terms, triples, then everything else by total degree and
// exponent vector.
void append_shape_key(const std::vector<int>& exp, bool diff, int di, int dj,
                      std::vector<int>* key) {
  int degree = diff ? 1 : 0;
  std::vector<int> active;
  for (size_t i = 0; i < exp.size(); ++i) {
    degree += exp[i];
    if (exp[i] > 0) active.push_back(static_cast<int>(i));
  }
  if (degree == 0) {
    key->push_back(0);
    return;
  }
  if (!diff && degree == 1) {
    key->push_back(1);
    key->push_back(active[0]);
    return;
  }
  if (!diff && degree == 2 && active.size() == 1) {
    key->push_back(2);
    key->push_back(active[0]);
    return;
  }
  if (!diff && degree == 2 && active.size() == 2) {
    key->push_back(3);
    key->push_back(active[0]);
    key->push_back(active[1]);
    return;
  }
  if (diff && degree == 3 && active.size() == 2) {
    key->push_back(4);
    key->push_back(di);
    key->push_back(dj);
    return;
  }
  if (!diff && degree == 3 && active.size() == 3) {
    key->push_back(5);
    key->push_back(active[0]);
    key->push_back(active[1]);
    key->push_back(active[2]);
    return;
  }
  key->push_back(6);
  key->push_back(degree);
  for (int e : exp) key->push_back(e);
  key->push_back(diff ? 1 : 0);
  key->push_back(di);
  key->push_back(dj);
}

std::vector<int> term_key(const Term& t) {
  std::vector<int> key;
  append_shape_key(t.proc_exp, false, -1, -1, &key);
  append_shape_key(t.mix_exp, t.has_diff(), t.diff_i, t.diff_j, &key);
  return key;
}

}  // namespace

bool term_less(const Term& a, const Term& b) {
  return term_key(a) < term_key(b);
}

std::string term_to_string(const Term& t, const VariableSet& vars) {
  if (t.is_constant()) return "1";
  std::string out;
  auto add_factor = [&out](const std::string& f) {
    if (!out.empty()) out += "*";
    out += f;
  };
  for (size_t i = 0; i < t.mix_exp.size(); ++i) {
    if (t.mix_exp[i] == 1) {
      add_factor(vars.mixture[i]);
    } else if (t.mix_exp[i] > 1) {
      add_factor(vars.mixture[i] + "^" + std::to_string(t.mix_exp[i]));
    }
  }
  if (t.has_diff()) {
    add_factor("(" + vars.mixture[t.diff_i] + "-" + vars.mixture[t.diff_j] + ")");
  }
  for (size_t j = 0; j < t.proc_exp.size(); ++j) {
    if (t.proc_exp[j] == 1) {
      add_factor(vars.process[j]);
    } else if (t.proc_exp[j] > 1) {
      add_factor(vars.process[j] + "^" + std::to_string(t.proc_exp[j]));
    }
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Splits on '*' outside parentheses.
std::vector<std::string> split_factors(const std::string& s) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == '*' && depth == 0) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

}  // namespace

Term parse_term(const std::string& text, const VariableSet& vars) {
  std::string s = trim(text);
  if (s.empty()) throw usage_error("empty term");
  Term t = Term::constant(vars);
  if (s == "1") return t;
  for (const std::string& factor : split_factors(s)) {
    if (factor.empty()) throw usage_error("malformed term '" + text + "'");
    if (factor == "1") {
      throw usage_error("'1' can only stand alone, not inside a product: '" + text + "'");
    }
    if (factor.front() == '(') {
      if (factor.back() != ')') throw usage_error("unbalanced parentheses in '" + text + "'");
      std::string body = factor.substr(1, factor.size() - 2);
      size_t dash = body.find('-');
      if (dash == std::string::npos) {
        throw usage_error("difference factor must look like (x1-x2): '" + text + "'");
      }
      int i = vars.mixture_index(trim(body.substr(0, dash)));
      int j = vars.mixture_index(trim(body.substr(dash + 1)));
      if (i < 0 || j < 0) {
        throw usage_error("difference factor names unknown mixture variables: '" + text + "'");
      }
      if (i >= j) {
        throw usage_error(
            "difference factor must list the lower-indexed component first "
            "(its sign is part of the definition): '" + text + "'");
      }
      if (t.has_diff()) throw usage_error("at most one difference factor per term: '" + text + "'");
      t.diff_i = i;
      t.diff_j = j;
      continue;
    }
    std::string name = factor;
    int power = 1;
    size_t caret = factor.find('^');
    if (caret != std::string::npos) {
      name = trim(factor.substr(0, caret));
      try {
        power = std::stoi(factor.substr(caret + 1));
      } catch (const std::exception&) {
        throw usage_error("bad exponent in '" + text + "'");
      }
      if (power < 1) throw usage_error("exponents must be positive: '" + text + "'");
    }
    int mi = vars.mixture_index(name);
    if (mi >= 0) {
      t.mix_exp[mi] += power;
      continue;
    }
    int pj = vars.process_index(name);
    if (pj >= 0) {
      t.proc_exp[pj] += power;
      continue;
    }
    throw usage_error("unknown variable '" + name + "' in term '" + text + "'");
  }
  return t;
}

bool TermSet::insert(const Term& t) {
  if (t.mix_exp.size() != static_cast<size_t>(vars_.n_mixture()) ||
      t.proc_exp.size() != static_cast<size_t>(vars_.n_process())) {
    throw usage_error("term does not match the variable set");
  }
  auto it = std::lower_bound(terms_.begin(), terms_.end(), t, term_less);
  if (it != terms_.end() && *it == t) return false;
  terms_.insert(it, t);
  return true;
}

bool TermSet::contains(const Term& t) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), t, term_less);
  return it != terms_.end() && *it == t;
}

bool TermSet::contains_constant() const {
  for (const Term& t : terms_) {
    if (t.is_constant()) return true;
  }
  return false;
}

TermSet TermSet::with(const Term& t) const {
  TermSet out = *this;
  out.insert(t);
  return out;
}

TermSet TermSet::without(const Term& t) const {
  TermSet out(vars_);
  for (const Term& u : terms_) {
    if (!(u == t)) out.insert(u);
  }
  return out;
}

bool TermSet::subset_of(const TermSet& other) const {
  for (const Term& t : terms_) {
    if (!other.contains(t)) return false;
  }
  return true;
}

bool TermSet::operator==(const TermSet& other) const {
  return vars_ == other.vars_ && terms_ == other.terms_;
}

std::vector<std::string> TermSet::names() const {
  std::vector<std::string> out;
  out.reserve(terms_.size());
  for (const Term& t : terms_) out.push_back(term_to_string(t, vars_));
  return out;
}

std::string TermSet::to_string(const std::string& sep) const {
  std::string out;
  for (size_t i = 0; i < terms_.size(); ++i) {
    if (i) out += sep;
    out += term_to_string(terms_[i], vars_);
  }
  return out;
}

TermSet TermSet::parse(const std::string& text, const VariableSet& vars) {
  TermSet out(vars);
  std::string cur;
  int depth = 0;
  auto flush = [&]() {
    std::string s = trim(cur);
    cur.clear();
    if (!s.empty()) out.insert(parse_term(s, vars));
  };
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if ((c == ',' || c == '+') && depth == 0) {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  if (out.empty()) throw usage_error("no terms given");
  return out;
}

TermSet scheffe_terms(const VariableSet& vars, ScheffeDegree degree) {
  int a = vars.n_mixture();
  if (a < 2) throw usage_error("a mixture needs at least two components");
  TermSet out(vars);
  for (int i = 0; i < a; ++i) out.insert(Term::mixture_main(vars, i));
  if (degree == ScheffeDegree::linear) return out;
  for (int i = 0; i < a; ++i) {
    for (int j = i + 1; j < a; ++j) {
      Term t = Term::constant(vars);
      t.mix_exp[i] = 1;
      t.mix_exp[j] = 1;
      out.insert(t);
    }
  }
  if (degree == ScheffeDegree::quadratic) return out;
  if (degree == ScheffeDegree::full_cubic) {
    for (int i = 0; i < a; ++i) {
      for (int j = i + 1; j < a; ++j) {
        Term t = Term::constant(vars);
        t.mix_exp[i] = 1;
        t.mix_exp[j] = 1;
        t.diff_i = i;
        t.diff_j = j;
        out.insert(t);
      }
    }
  }
  for (int i = 0; i < a; ++i) {
    for (int j = i + 1; j < a; ++j) {
      for (int k = j + 1; k < a; ++k) {
        Term t = Term::constant(vars);
        t.mix_exp[i] = 1;
        t.mix_exp[j] = 1;
        t.mix_exp[k] = 1;
        out.insert(t);
      }
    }
  }
  return out;
}

TermSet slack_model(const VariableSet& vars, int drop_index, SlackDegree degree) {
  int a = vars.n_mixture();
  if (drop_index < 0 || drop_index >= a) throw usage_error("slack_model: bad component index");
  TermSet out(vars);
  out.insert(Term::constant(vars));
  std::vector<int> kept;
  for (int i = 0; i < a; ++i) {
    if (i != drop_index) kept.push_back(i);
  }
  for (int i : kept) out.insert(Term::mixture_main(vars, i));
  if (degree == SlackDegree::linear) return out;
  for (int i : kept) {
    Term t = Term::constant(vars);
    t.mix_exp[i] = 2;
    out.insert(t);
  }
  for (size_t p = 0; p < kept.size(); ++p) {
    for (size_t q = p + 1; q < kept.size(); ++q) {
      Term t = Term::constant(vars);
      t.mix_exp[kept[p]] = 1;
      t.mix_exp[kept[q]] = 1;
      out.insert(t);
    }
  }
  return out;
}

TermSet cross(const TermSet& mixture_terms, const TermSet& process_terms) {
  if (!(mixture_terms.variables() == process_terms.variables())) {
    throw usage_error("cross: term sets use different variable sets");
  }
  TermSet out(mixture_terms.variables());
  for (const Term& m : mixture_terms.terms()) {
    for (const Term& p : process_terms.terms()) {
      if (p.has_diff()) throw usage_error("cross: process monomials cannot carry difference factors");
      Term t = m;
      for (size_t j = 0; j < t.proc_exp.size(); ++j) t.proc_exp[j] += p.proc_exp[j];
      for (size_t i = 0; i < t.mix_exp.size(); ++i) t.mix_exp[i] += p.mix_exp[i];
      out.insert(t);
    }
  }
  return out;
}

TermSet process_monomials_linear(const VariableSet& vars) {
  TermSet out(vars);
  out.insert(Term::constant(vars));
  for (int j = 0; j < vars.n_process(); ++j) {
    Term t = Term::constant(vars);
    t.proc_exp[j] = 1;
    out.insert(t);
  }
  return out;
}

TermSet process_monomials_quadratic(const VariableSet& vars) {
  TermSet out = process_monomials_linear(vars);
  int r = vars.n_process();
  for (int i = 0; i < r; ++i) {
    for (int j = i + 1; j < r; ++j) {
      Term t = Term::constant(vars);
      t.proc_exp[i] = 1;
      t.proc_exp[j] = 1;
      out.insert(t);
    }
  }
  return out;
}

DesignTable::DesignTable(VariableSet v, Eigen::MatrixXd mix, Eigen::MatrixXd proc,
                         double sum_tol)
    : vars(std::move(v)), mixture(std::move(mix)), process(std::move(proc)) {
  if (mixture.cols() != vars.n_mixture()) {
    throw usage_error("design table has the wrong number of mixture columns");
  }
  if (process.rows() == 0 && vars.n_process() == 0) {
    process.resize(mixture.rows(), 0);
  }
  if (process.cols() != vars.n_process() || process.rows() != mixture.rows()) {
    throw usage_error("design table process block does not match");
  }
  for (int i = 0; i < mixture.rows(); ++i) {
    double s = mixture.row(i).sum();
    if (std::fabs(s - 1.0) > sum_tol) {
      throw data_error("mixture proportions in run " + std::to_string(i + 1) +
                       " sum to " + std::to_string(s) + ", not 1");
    }
    for (int j = 0; j < mixture.cols(); ++j) {
      if (mixture(i, j) < -sum_tol) {
        throw data_error("negative mixture proportion in run " + std::to_string(i + 1));
      }
    }
  }
}

namespace {

void lattice_recurse(int a, int m, int pos, int left, std::vector<int>* cur,
                     std::vector<std::vector<int>>* rows) {
  if (pos == a - 1) {
    (*cur)[pos] = left;
    rows->push_back(*cur);
    return;
  }
  for (int k = left; k >= 0; --k) {
    (*cur)[pos] = k;
    lattice_recurse(a, m, pos + 1, left - k, cur, rows);
  }
}

}  // namespace

DesignTable simplex_lattice(const VariableSet& vars, int m) {
  if (m < 1) throw usage_error("simplex_lattice: degree must be at least 1");
  int a = vars.n_mixture();
  std::vector<std::vector<int>> rows;
  std::vector<int> cur(a, 0);
  lattice_recurse(a, m, 0, m, &cur, &rows);
  Eigen::MatrixXd mix(rows.size(), a);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < a; ++j) mix(static_cast<int>(i), j) = rows[i][j] / static_cast<double>(m);
  }
  return DesignTable(vars, mix, Eigen::MatrixXd(rows.size(), vars.n_process()).setZero());
}

DesignTable simplex_centroid(const VariableSet& vars) {
  int a = vars.n_mixture();
  if (a > 20) throw usage_error("simplex_centroid: too many components");
  // Enumerate nonempty subsets grouped by size, lexicographic within a size.
  std::vector<std::vector<int>> subsets;
  for (int size = 1; size <= a; ++size) {
    std::vector<int> idx(size);
    for (int i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      subsets.push_back(idx);
      int i = size - 1;
      while (i >= 0 && idx[i] == a - size + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(subsets.size(), a);
  for (size_t r = 0; r < subsets.size(); ++r) {
    for (int j : subsets[r]) mix(static_cast<int>(r), j) = 1.0 / subsets[r].size();
  }
  return DesignTable(vars, mix, Eigen::MatrixXd(subsets.size(), vars.n_process()).setZero());
}

Eigen::MatrixXd model_matrix(const TermSet& terms, const DesignTable& design) {
  if (!(terms.variables() == design.vars)) {
    throw usage_error("model_matrix: terms and design use different variable sets");
  }
  if (terms.empty()) throw usage_error("model_matrix: empty term set");
  int n = design.n_runs();
  Eigen::MatrixXd X(n, terms.size());
  for (int i = 0; i < n; ++i) {
    Eigen::RowVectorXd x = design.mixture.row(i);
    Eigen::RowVectorXd z = design.process.row(i);
    for (int k = 0; k < terms.size(); ++k) {
      X(i, k) = terms.terms()[k].eval(x, z);
    }
  }
  return X;
}

}  // namespace meandisp
