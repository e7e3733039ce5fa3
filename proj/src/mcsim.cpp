#include "meandisp/mcsim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <thread>

#include "meandisp/errors.hpp"

namespace meandisp {

namespace {

// Marsaglia polar method on top of explicit 53-bit uniforms. Keeps the
// normal stream independent of standard-library distribution internals, so
// seeds reproduce across compilers.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    have_spare_ = true;
    return u * factor;
  }

 private:
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

double predictor(const TermSet& terms, const Eigen::VectorXd& coefs,
                 const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& z) {
  double eta = 0.0;
  const auto& ts = terms.terms();
  for (size_t k = 0; k < ts.size(); ++k)
    eta += coefs[static_cast<Eigen::Index>(k)] * ts[k].eval(x, z);
  return eta;
}

struct PairTally {
  int counts[3] = {0, 0, 0};
  int mean_counts[3] = {0, 0, 0};
  int disp_counts[3] = {0, 0, 0};
  int failures = 0;
};

// Outcome of one replication for every criterion pair: the joint class, the
// per-component classes, or -1 when selection failed.
struct RepResult {
  std::vector<int> joint;
  std::vector<int> mean_comp;
  std::vector<int> disp_comp;
};

std::string penalty_suffix(Penalty pen) {
  return "(" + penalty_name(pen) + ")";
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

TruthSpec TruthSpec::defaults() {
  const VariableSet vars = VariableSet::standard(3, 1);
  TruthSpec t{vars, TermSet(vars), Eigen::VectorXd(5), TermSet(vars),
              Eigen::VectorXd(4)};
  t.mean_terms = TermSet::parse("x1, x2, x3, x1*x3, x3*z1", vars);
  t.mean_coefs << 15.0, 15.0, 10.0, 35.0, 25.0;
  t.disp_terms = TermSet::parse("x1, x2, x3, x1*x3", vars);
  t.disp_coefs << 0.4, 0.5, 0.5, 3.5;
  return t;
}

Dataset generate_dataset(const TruthSpec& truth, int replicates,
                         std::uint64_t seed) {
  if (replicates < 1)
    throw usage_error("generate_dataset: replicates must be at least 1");
  if (truth.mean_coefs.size() != truth.mean_terms.size() ||
      truth.disp_coefs.size() != truth.disp_terms.size())
    throw usage_error("generate_dataset: coefficient count mismatch");

  const DesignTable base = simplex_centroid(truth.vars);
  const int points = base.n_runs();
  const int r = truth.vars.n_process();
  if (r != 1)
    throw usage_error("generate_dataset: the study design uses exactly one "
                      "two-level noise variable");

  const int block = points * 2;
  const int n = block * replicates;
  Eigen::MatrixXd mixture(n, truth.vars.n_mixture());
  Eigen::MatrixXd process(n, 1);
  Eigen::VectorXd y(n);
  std::vector<std::string> ids(static_cast<size_t>(n));

  NormalSampler normal(seed);
  int row = 0;
  for (int rep = 0; rep < replicates; ++rep) {
    for (int p = 0; p < points; ++p) {
      for (int level = 0; level < 2; ++level) {
        const Eigen::RowVectorXd x = base.mixture.row(p);
        Eigen::RowVectorXd z(1);
        z[0] = level == 0 ? -1.0 : 1.0;
        const double mu = predictor(truth.mean_terms, truth.mean_coefs, x, z);
        const double phi =
            std::exp(predictor(truth.disp_terms, truth.disp_coefs, x, z));
        mixture.row(row) = x;
        process(row, 0) = z[0];
        y[row] = mu + std::sqrt(phi) * normal.next();
        ids[static_cast<size_t>(row)] = std::to_string(row + 1);
        ++row;
      }
    }
  }

  DesignTable design(truth.vars, std::move(mixture), std::move(process));
  return Dataset{std::move(design), std::move(y), std::move(ids)};
}

TermSet expand_constant(const TermSet& terms) {
  if (!terms.contains_constant()) return terms;
  const VariableSet& vars = terms.variables();
  TermSet out(vars);
  for (const Term& t : terms.terms()) {
    if (t.is_constant()) {
      for (int i = 0; i < vars.n_mixture(); ++i)
        out.insert(Term::mixture_main(vars, i));
    } else {
      out.insert(t);
    }
  }
  return out;
}

Outcome classify_component(const TermSet& selected, const TermSet& truth) {
  const TermSet sel = expand_constant(selected);
  const TermSet tru = expand_constant(truth);
  if (sel == tru) return Outcome::correct;
  if (tru.subset_of(sel)) return Outcome::type1;
  return Outcome::type2;
}

Outcome classify(const TermSet& selected_mean, const TermSet& selected_disp,
                 const TruthSpec& truth) {
  const Outcome m = classify_component(selected_mean, truth.mean_terms);
  const Outcome d = classify_component(selected_disp, truth.disp_terms);
  if (m == Outcome::type2 || d == Outcome::type2) return Outcome::type2;
  if (m == Outcome::correct && d == Outcome::correct) return Outcome::correct;
  return Outcome::type1;
}

std::string criterion_pair_label_mean(const CriterionSpec& spec) {
  if (spec.mean_kind == MeanCriterion::eaic) return "eaic";
  return "r2m" + penalty_suffix(spec.mean_penalty);
}

std::string criterion_pair_label_disp(const CriterionSpec& spec) {
  if (spec.disp_kind == DispCriterion::aicc) return "aicc";
  return "r2d" + penalty_suffix(spec.disp_penalty);
}

McReport run_study(const TruthSpec& truth, const StudyConfig& config) {
  if (config.n_mc < 1) throw usage_error("run_study: n_mc must be positive");
  if (config.criterion_pairs.empty())
    throw usage_error("run_study: no criterion pairs given");
  if (config.replicate_counts.empty())
    throw usage_error("run_study: no replicate counts given");

  // The study pool: special-cubic mixture terms crossed with {1, z}. The
  // noise variable is two-level, so its square would alias the constant and
  // is deliberately not generated.
  const TermSet pool = cross(scheffe_terms(truth.vars,
                                           ScheffeDegree::special_cubic),
                             process_monomials_linear(truth.vars));

  const size_t n_pairs = config.criterion_pairs.size();
  const size_t n_sizes = config.replicate_counts.size();
  const size_t n_items = n_sizes * static_cast<size_t>(config.n_mc);

  std::vector<RepResult> results(n_items);
  std::atomic<size_t> cursor{0};

  auto worker = [&]() {
    for (;;) {
      const size_t item = cursor.fetch_add(1);
      if (item >= n_items) return;
      const size_t size_idx = item / static_cast<size_t>(config.n_mc);
      const int rep_idx = static_cast<int>(item % config.n_mc);
      const int replicates = config.replicate_counts[size_idx];

      const std::uint64_t seed = splitmix64(
          splitmix64(splitmix64(config.master_seed) +
                     static_cast<std::uint64_t>(replicates)) +
          static_cast<std::uint64_t>(rep_idx));
      const Dataset data = generate_dataset(truth, replicates, seed);

      RepResult res;
      res.joint.assign(n_pairs, -1);
      res.mean_comp.assign(n_pairs, -1);
      res.disp_comp.assign(n_pairs, -1);
      for (size_t pi = 0; pi < n_pairs; ++pi) {
        SelectionConfig sel(pool);
        sel.alpha = config.alpha;
        sel.criterion = config.criterion_pairs[pi];
        try {
          const JointSelectionResult out =
              select_joint(data.design, data.y, sel);
          res.joint[pi] = static_cast<int>(
              classify(out.mean_terms, out.disp_terms, truth));
          res.mean_comp[pi] = static_cast<int>(
              classify_component(out.mean_terms, truth.mean_terms));
          res.disp_comp[pi] = static_cast<int>(
              classify_component(out.disp_terms, truth.disp_terms));
        } catch (const std::exception&) {
          // counted as a failure for this cell
        }
      }
      results[item] = std::move(res);
    }
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(jobs));
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }

  McReport report;
  report.master_seed = config.master_seed;
  report.n_mc = config.n_mc;
  report.alpha = config.alpha;

  for (size_t pi = 0; pi < n_pairs; ++pi) {
    for (size_t si = 0; si < n_sizes; ++si) {
      PairTally tally;
      for (int rep = 0; rep < config.n_mc; ++rep) {
        const RepResult& res =
            results[si * static_cast<size_t>(config.n_mc) +
                    static_cast<size_t>(rep)];
        if (res.joint[pi] < 0) {
          ++tally.failures;
          continue;
        }
        ++tally.counts[res.joint[pi]];
        ++tally.mean_counts[res.mean_comp[pi]];
        ++tally.disp_counts[res.disp_comp[pi]];
      }
      const int ok = config.n_mc - tally.failures;
      McCell cell;
      cell.mean_criterion =
          criterion_pair_label_mean(config.criterion_pairs[pi]);
      cell.disp_criterion =
          criterion_pair_label_disp(config.criterion_pairs[pi]);
      cell.replicates = config.replicate_counts[si];
      cell.n = 14 * config.replicate_counts[si];
      cell.n_mc = config.n_mc;
      cell.failures = tally.failures;
      if (ok > 0) {
        cell.correct = static_cast<double>(tally.counts[0]) / ok;
        cell.type1 = static_cast<double>(tally.counts[1]) / ok;
        cell.type2 = static_cast<double>(tally.counts[2]) / ok;
        cell.mean_correct = static_cast<double>(tally.mean_counts[0]) / ok;
        cell.mean_type1 = static_cast<double>(tally.mean_counts[1]) / ok;
        cell.mean_type2 = static_cast<double>(tally.mean_counts[2]) / ok;
        cell.disp_correct = static_cast<double>(tally.disp_counts[0]) / ok;
        cell.disp_type1 = static_cast<double>(tally.disp_counts[1]) / ok;
        cell.disp_type2 = static_cast<double>(tally.disp_counts[2]) / ok;
      }
      if (tally.failures > 0.01 * config.n_mc) report.failure_flag = true;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::string mcreport_to_csv(const McReport& report) {
  // Column set: every sample size seen in the cells, in first-seen order.
  std::vector<int> sizes;
  for (const McCell& c : report.cells)
    if (std::find(sizes.begin(), sizes.end(), c.n) == sizes.end())
      sizes.push_back(c.n);

  std::ostringstream out;
  out << "mean_criterion,disp_criterion,outcome";
  for (int n : sizes) out << ",n_" << n;
  out << '\n';

  auto cell_at = [&](const std::string& mc, const std::string& dc,
                     int n) -> const McCell* {
    for (const McCell& c : report.cells)
      if (c.mean_criterion == mc && c.disp_criterion == dc && c.n == n)
        return &c;
    return nullptr;
  };

  std::vector<std::pair<std::string, std::string>> pairs;
  for (const McCell& c : report.cells) {
    const auto key = std::make_pair(c.mean_criterion, c.disp_criterion);
    if (std::find(pairs.begin(), pairs.end(), key) == pairs.end())
      pairs.push_back(key);
  }

  char buf[32];
  const char* outcome_names[3] = {"correct", "type1", "type2"};
  for (const auto& [mc, dc] : pairs) {
    for (int o = 0; o < 3; ++o) {
      out << mc << ',' << dc << ',' << outcome_names[o];
      for (int n : sizes) {
        const McCell* c = cell_at(mc, dc, n);
        double v = 0.0;
        if (c != nullptr)
          v = o == 0 ? c->correct : (o == 1 ? c->type1 : c->type2);
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        out << ',' << buf;
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace meandisp
