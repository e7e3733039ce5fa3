// Command-line front end for the meandisp library.
//
// Subcommands:
//   design    emit a simplex lattice or centroid design as CSV
//   fit       joint mean/dispersion GLM fit for fixed term sets
//   select    alternating criterion-guided forward selection
//   moments   unconditional mean/variance over the noise distribution
//   simulate  Monte Carlo evaluation of the selection procedure
//   diagnose  per-observation diagnostics (CSV and optional SVG)
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <algorithm>
#include <cstdarg>
#include <cstdio>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "meandisp/dataset.hpp"
#include "meandisp/errors.hpp"
#include "meandisp/glm.hpp"
#include "meandisp/joint.hpp"
#include "meandisp/mcsim.hpp"
#include "meandisp/moments.hpp"
#include "meandisp/prob.hpp"
#include "meandisp/selection.hpp"
#include "meandisp/terms.hpp"

namespace md = meandisp;
using json = nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// Output plumbing. MEANDISP_OUTPUT_DIR redirects relative output paths; it
// never affects inputs. "-" stands for stdout.

std::string resolve_output(const std::string& path) {
  if (path.empty() || path == "-") return path;
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("MEANDISP_OUTPUT_DIR"))
      if (*dir != '\0') p = std::filesystem::path(dir) / p;
  }
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  return p.string();
}

void write_output(const std::string& path, const std::string& content) {
  const std::string where = resolve_output(path);
  if (where.empty() || where == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(where, std::ios::binary);
  if (!out) throw md::data_error("cannot open '" + where + "' for writing");
  out << content;
  if (!out) throw md::data_error("failed while writing '" + where + "'");
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw md::data_error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw md::data_error("malformed JSON in '" + path + "': " + e.what());
  }
  return j;
}

// The bundled example data directory: the MEANDISP_DATA_DIR environment
// variable when set, otherwise ./data next to the working directory.
std::string bundled_data_dir() {
  if (const char* env = std::getenv("MEANDISP_DATA_DIR"))
    if (*env != '\0') return env;
  return "data";
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

Eigen::VectorXd parse_numbers(const std::string& text, const char* what) {
  const std::vector<std::string> parts = split_list(text);
  Eigen::VectorXd v(static_cast<Eigen::Index>(parts.size()));
  for (size_t i = 0; i < parts.size(); ++i) {
    try {
      size_t used = 0;
      v[static_cast<Eigen::Index>(i)] = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument(parts[i]);
    } catch (const std::exception&) {
      throw md::usage_error(std::string(what) + ": malformed number '" +
                            parts[i] + "'");
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Shared dataset / criterion option blocks.

struct DataOptions {
  std::string path;
  bool bread = false;
  std::string response = "y";
  std::string mixture;
  std::string process;
  std::string id;
  double sum_tol = 1e-6;
};

void add_data_options(CLI::App* cmd, DataOptions& opt) {
  cmd->add_option("--data", opt.path, "input CSV file");
  cmd->add_flag("--bread", opt.bread,
                "use the bundled bread-volume dataset (90 runs)");
  cmd->add_option("--response", opt.response, "response column name")
      ->capture_default_str();
  cmd->add_option("--mixture", opt.mixture,
                  "comma-separated mixture columns (default: every x<k>)");
  cmd->add_option("--process", opt.process,
                  "comma-separated process columns (default: every z<k>)");
  cmd->add_option("--id", opt.id, "row-identifier column");
  cmd->add_option("--sum-tol", opt.sum_tol,
                  "tolerance for mixture rows summing to one")
      ->capture_default_str();
}

md::Dataset load_data(const DataOptions& opt) {
  std::string path = opt.path;
  if (opt.bread) {
    if (!path.empty())
      throw md::usage_error("--data and --bread are mutually exclusive");
    path = bundled_data_dir() + "/bread_volume.csv";
  }
  if (path.empty())
    throw md::usage_error("no input data: pass --data FILE or --bread");
  md::CsvSchema schema;
  schema.response = opt.response;
  schema.mixture = split_list(opt.mixture);
  schema.process = split_list(opt.process);
  schema.id = opt.id;
  schema.sum_tol = opt.sum_tol;
  return md::load_csv(path, schema);
}

md::CriterionSpec parse_criteria(const std::string& mean_text,
                                 const std::string& disp_text) {
  md::CriterionSpec spec;
  auto parse_one = [](const std::string& text, bool is_mean,
                      md::CriterionSpec& out) {
    if (text == "eaic") {
      if (!is_mean)
        throw md::usage_error("eaic is a mean criterion; use aicc for the "
                              "dispersion side");
      out.mean_kind = md::MeanCriterion::eaic;
      return;
    }
    if (text == "aicc") {
      if (is_mean)
        throw md::usage_error("aicc is a dispersion criterion; use eaic for "
                              "the mean side");
      out.disp_kind = md::DispCriterion::aicc;
      return;
    }
    if (text.rfind("r2:", 0) == 0) {
      const md::Penalty pen = md::parse_penalty(text.substr(3));
      if (is_mean) {
        out.mean_kind = md::MeanCriterion::r2_tilde;
        out.mean_penalty = pen;
      } else {
        out.disp_kind = md::DispCriterion::r2_tilde;
        out.disp_penalty = pen;
      }
      return;
    }
    throw md::usage_error("unknown criterion '" + text +
                          "' (expected r2:1, r2:sqrt_n, r2:log_n, eaic or "
                          "aicc)");
  };
  parse_one(mean_text, true, spec);
  parse_one(disp_text, false, spec);
  return spec;
}

md::ScheffeDegree parse_mixture_order(const std::string& text) {
  if (text == "linear") return md::ScheffeDegree::linear;
  if (text == "quadratic") return md::ScheffeDegree::quadratic;
  if (text == "special_cubic") return md::ScheffeDegree::special_cubic;
  if (text == "full_cubic" || text == "cubic")
    return md::ScheffeDegree::full_cubic;
  throw md::usage_error("unknown mixture order '" + text +
                        "' (expected linear, quadratic, special_cubic or "
                        "full_cubic)");
}

// ---------------------------------------------------------------------------
// JSON serialization.

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd json_to_vec(const json& a, const char* what) {
  if (!a.is_array())
    throw md::data_error(std::string(what) + ": expected a JSON array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number())
      throw md::data_error(std::string(what) + ": non-numeric entry");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

json test_to_json(const md::TestResult& t) {
  return json{{"stat", t.stat}, {"df1", t.df1}, {"df2", t.df2}, {"p", t.p}};
}

json wald_to_json(const std::vector<md::WaldRow>& rows) {
  json a = json::array();
  for (const md::WaldRow& r : rows)
    a.push_back(json{{"term", r.term},
                     {"estimate", r.estimate},
                     {"se", r.se},
                     {"t", r.t},
                     {"p", r.p}});
  return a;
}

json variables_to_json(const md::VariableSet& vars) {
  return json{{"mixture", vars.mixture}, {"process", vars.process}};
}

// Everything downstream consumers need: Wald tables for reading, term names
// and coefficients for refitting, and the per-observation arrays that the
// diagnose subcommand rebuilds its component fits from.
json joint_fit_to_json(const md::JointFit& fit, const md::VariableSet& vars,
                       const std::vector<std::string>& row_ids) {
  const int n = fit.mean.n();
  const int kappa = fit.mean.p() + fit.dispersion.p();

  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "joint_fit";
  j["family"] = md::family_name(fit.mean.family);
  j["mean_link"] = md::link_name(fit.mean.link);
  j["dispersion_link"] = md::link_name(fit.dispersion.link);
  j["variables"] = variables_to_json(vars);
  j["n"] = n;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["q_plus"] = fit.q_plus;
  j["eaic"] = md::eaic(fit.q_plus, kappa, n);
  j["q_history"] = fit.q_history;

  json crit;
  crit["r2m(sqrt_n)"] =
      md::r2_tilde_mean(fit.mean, fit.phi, md::Penalty::sqrt_n);
  crit["r2m(1)"] = md::r2_tilde_mean(fit.mean, fit.phi, md::Penalty::one);
  crit["r2m(log_n)"] =
      md::r2_tilde_mean(fit.mean, fit.phi, md::Penalty::log_n);
  crit["r2d(1)"] = md::r2_tilde_disp(fit.dispersion, md::Penalty::one);
  crit["aicc_dispersion"] = md::aicc_dispersion(
      fit.dispersion.y, fit.dispersion.mu, fit.mean.hat, fit.dispersion.p(),
      n);
  j["criteria"] = std::move(crit);

  const double mean_scale = fit.mean.pearson_scale();
  json mean;
  mean["terms"] = fit.mean.col_names;
  mean["coefficients"] = vec_to_json(fit.mean.beta);
  mean["pearson_scale"] = mean_scale;
  mean["wald"] = wald_to_json(md::wald_table(fit.mean, mean_scale));
  mean["deviance"] = fit.mean.deviance;
  mean["weighted_standardized_deviance"] =
      (fit.d_star.array() / fit.phi.array()).sum();
  mean["fitted"] = vec_to_json(fit.mean.mu);
  mean["leverage"] = vec_to_json(fit.mean.hat);
  mean["unit_deviance"] = vec_to_json(fit.mean.dev_comp);
  mean["prior_weight"] = vec_to_json(fit.mean.prior_w);
  j["mean"] = std::move(mean);

  const double disp_scale = fit.dispersion.pearson_scale();
  json disp;
  disp["terms"] = fit.dispersion.col_names;
  disp["coefficients"] = vec_to_json(fit.dispersion.beta);
  disp["pearson_scale"] = disp_scale;
  disp["wald"] = wald_to_json(md::wald_table(fit.dispersion, disp_scale));
  disp["deviance"] = fit.dispersion.deviance;
  disp["response"] = vec_to_json(fit.dispersion.y);
  disp["fitted"] = vec_to_json(fit.dispersion.mu);
  disp["leverage"] = vec_to_json(fit.dispersion.hat);
  disp["unit_deviance"] = vec_to_json(fit.dispersion.dev_comp);
  j["dispersion"] = std::move(disp);

  json obs;
  obs["id"] = row_ids;
  obs["y"] = vec_to_json(fit.mean.y);
  obs["phi"] = vec_to_json(fit.phi);
  obs["standardized_deviance"] = vec_to_json(fit.d_star);
  j["observations"] = std::move(obs);
  return j;
}

json component_run_to_json(const md::ComponentRun& run) {
  json j;
  j["component"] = run.component;
  j["assumed_constant"] = run.assumed_constant;
  if (run.assumed_constant) return j;
  j["initial_test_run"] = run.initial_test_run;
  if (run.initial_test_run) j["initial_test"] = test_to_json(run.initial_test);
  j["use_constant"] = run.use_constant;
  j["initial_model"] = run.initial_model;
  j["initial_criterion"] = run.initial_criterion;
  j["initial_r2_lambda"] = run.initial_r2_lambda;
  j["initial_r2_one"] = run.initial_r2_one;
  j["initial_deviance"] = run.initial_dev;
  json steps = json::array();
  for (const md::StepRecord& s : run.steps) {
    json sj;
    sj["model"] = s.model;
    sj["added_term"] = s.added_term;
    sj["criterion"] = s.criterion;
    sj["r2_lambda"] = s.r2_lambda;
    sj["r2_one"] = s.r2_one;
    sj["deviance"] = s.dev;
    sj["test"] = test_to_json(s.test);
    sj["criterion_improved"] = s.criterion_improved;
    sj["significant"] = s.significant;
    sj["accepted"] = s.accepted;
    sj["lookahead"] = s.lookahead;
    json cands = json::array();
    for (const md::CandidateEval& c : s.candidates) {
      json cj;
      cj["term"] = c.term;
      cj["criterion"] = c.criterion;
      cj["failed"] = c.failed;
      if (!c.note.empty()) cj["note"] = c.note;
      cands.push_back(std::move(cj));
    }
    sj["candidates"] = std::move(cands);
    steps.push_back(std::move(sj));
  }
  j["steps"] = std::move(steps);
  j["final_model"] = run.final_model;
  j["final_criterion"] = run.final_criterion;
  if (!run.note.empty()) j["note"] = run.note;
  return j;
}

json trace_to_json(const md::SelectionTrace& trace) {
  json j;
  j["chosen_iteration"] = trace.chosen_iteration;
  j["stop_reason"] = trace.stop_reason;
  json iters = json::array();
  for (const md::IterationRecord& rec : trace.iterations) {
    json ij;
    ij["index"] = rec.index;
    ij["dispersion"] = component_run_to_json(rec.dispersion);
    ij["mean"] = component_run_to_json(rec.mean);
    iters.push_back(std::move(ij));
  }
  j["iterations"] = std::move(iters);
  return j;
}

// ---------------------------------------------------------------------------
// Text rendering.

std::string render_wald_text(const std::string& title,
                             const std::vector<md::WaldRow>& rows) {
  std::ostringstream out;
  out << title << '\n';
  out << fmt("  %-18s %12s %12s %10s %10s\n", "term", "estimate", "se", "t",
             "p");
  for (const md::WaldRow& r : rows)
    out << fmt("  %-18s %12.4f %12.4f %10.3f %10.4f\n", r.term.c_str(),
               r.estimate, r.se, r.t, r.p);
  return out.str();
}

std::string stat_label(const md::TestResult& t) {
  if (t.df2 > 0.0)
    return fmt("F = %.4f on (%g, %g) df", t.stat, t.df1, t.df2);
  return fmt("chi2 = %.4f on %g df", t.stat, t.df1);
}

void render_component_text(std::ostringstream& out,
                           const md::ComponentRun& run, bool is_mean) {
  const char* label = is_mean ? "Mean" : "Dispersion";
  if (run.assumed_constant) {
    out << "  " << label << ": assumed constant (phi = 1)\n";
    return;
  }
  out << "  " << label << '\n';
  if (run.initial_test_run) {
    out << "    initial test: " << stat_label(run.initial_test)
        << fmt(", p = %.4f -> %s\n", run.initial_test.p,
               run.use_constant ? "constant start"
                                : "main-effect start");
  }
  const char* r2l = is_mean ? "R2m(pen)" : "R2d(pen)";
  const char* r2o = is_mean ? "R2m(1)" : "R2d(1)";
  const char* devcol = is_mean ? "D*" : "D";
  out << fmt("    %-34s %10s %10s %14s %10s %8s\n", "model", r2l, r2o, devcol,
             "stat", "p");
  out << fmt("    %-34s %10.4f %10.4f %14.4f %10s %8s\n",
             run.initial_model.c_str(), run.initial_r2_lambda,
             run.initial_r2_one, run.initial_dev, "-", "-");
  for (const md::StepRecord& s : run.steps) {
    std::string name = "+ " + s.added_term;
    std::string verdict = s.accepted ? (s.lookahead ? "accepted*" : "accepted")
                                     : "rejected";
    out << fmt("    %-34s %10.4f %10.4f %14.4f %10.4f %8.4f  %s\n",
               name.c_str(), s.r2_lambda, s.r2_one, s.dev, s.test.stat,
               s.test.p, verdict.c_str());
  }
  out << "    final: " << run.final_model
      << fmt("  (criterion %.4f)\n", run.final_criterion);
  if (!run.note.empty()) out << "    note: " << run.note << '\n';
}

std::string render_trace_text(const md::JointSelectionResult& result,
                              const md::SelectionConfig& cfg) {
  std::ostringstream out;
  out << fmt(
      "Alternating model selection (alpha = %g, mean criterion %s, "
      "dispersion criterion %s)\n",
      cfg.alpha, md::criterion_pair_label_mean(cfg.criterion).c_str(),
      md::criterion_pair_label_disp(cfg.criterion).c_str());
  for (const md::IterationRecord& rec : result.trace.iterations) {
    out << fmt("\nIteration %d\n", rec.index);
    render_component_text(out, rec.dispersion, false);
    render_component_text(out, rec.mean, true);
  }
  out << "\nStopped: " << result.trace.stop_reason << '\n';
  out << fmt("Kept iteration %d\n", result.trace.chosen_iteration);
  out << "\nMean model: " << result.mean_terms.to_string() << '\n';
  out << "Dispersion model: " << result.disp_terms.to_string() << '\n';
  return out.str();
}

std::string render_fit_text(const md::JointFit& fit) {
  std::ostringstream out;
  const int n = fit.mean.n();
  const int kappa = fit.mean.p() + fit.dispersion.p();
  out << fmt("Joint fit: %s/%s mean, gamma/%s dispersion, n = %d\n",
             md::family_name(fit.mean.family).c_str(),
             md::link_name(fit.mean.link).c_str(),
             md::link_name(fit.dispersion.link).c_str(), n);
  out << fmt("  alternation %s after %d iterations\n",
             fit.converged ? "converged" : "did NOT converge",
             fit.iterations);
  out << '\n'
      << render_wald_text(
             "Mean model",
             md::wald_table(fit.mean, fit.mean.pearson_scale()));
  out << fmt("  weighted deviance D = %.4f, D* = %.4f\n", fit.mean.deviance,
             (fit.d_star.array() / fit.phi.array()).sum());
  out << fmt("  R2m(sqrt_n) = %.4f, R2m(1) = %.4f\n",
             md::r2_tilde_mean(fit.mean, fit.phi, md::Penalty::sqrt_n),
             md::r2_tilde_mean(fit.mean, fit.phi, md::Penalty::one));
  out << '\n'
      << render_wald_text(
             "Dispersion model",
             md::wald_table(fit.dispersion, fit.dispersion.pearson_scale()));
  out << fmt("  gamma deviance D = %.4f, R2d(1) = %.4f\n",
             fit.dispersion.deviance,
             md::r2_tilde_disp(fit.dispersion, md::Penalty::one));
  out << fmt("\n  Q+ = %.4f, EAIC = %.4f\n", fit.q_plus,
             md::eaic(fit.q_plus, kappa, n));
  return out.str();
}

// ---------------------------------------------------------------------------
// design

void cmd_design(const std::string& kind, int a, int m,
                const std::string& out_path) {
  const md::VariableSet vars = md::VariableSet::standard(a, 0);
  md::DesignTable table = [&] {
    if (kind == "centroid") return md::simplex_centroid(vars);
    if (kind == "lattice") {
      if (m < 1)
        throw md::usage_error("design lattice needs a degree m >= 1");
      return md::simplex_lattice(vars, m);
    }
    throw md::usage_error("unknown design kind '" + kind +
                          "' (expected lattice or centroid)");
  }();

  std::ostringstream out;
  for (int j = 0; j < vars.n_mixture(); ++j)
    out << (j ? "," : "") << vars.mixture[static_cast<size_t>(j)];
  out << '\n';
  for (int i = 0; i < table.n_runs(); ++i) {
    for (int j = 0; j < vars.n_mixture(); ++j)
      out << (j ? "," : "") << fmt("%.17g", table.mixture(i, j));
    out << '\n';
  }
  write_output(out_path.empty() ? "-" : out_path, out.str());
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  DataOptions data;
  std::string mean_terms;
  std::string disp_terms = "1";
  std::string family = "normal";
  std::string mean_link = "identity";
  std::string disp_link = "log";
  std::string json_path;
};

void cmd_fit(const FitOptions& opt) {
  const md::Dataset data = load_data(opt.data);
  const md::VariableSet& vars = data.design.vars;
  const md::TermSet mean_terms = md::TermSet::parse(opt.mean_terms, vars);
  const md::TermSet disp_terms = md::TermSet::parse(opt.disp_terms, vars);
  if (mean_terms.empty()) throw md::usage_error("empty mean term set");
  if (disp_terms.empty()) throw md::usage_error("empty dispersion term set");

  md::JointConfig cfg;
  cfg.mean_family = md::parse_family(opt.family);
  cfg.mean_link = md::parse_link(opt.mean_link);
  cfg.disp_link = md::parse_link(opt.disp_link);

  const Eigen::MatrixXd X = md::model_matrix(mean_terms, data.design);
  const Eigen::MatrixXd U = md::model_matrix(disp_terms, data.design);
  const md::JointFit fit = md::fit_joint(X, mean_terms.names(), U,
                                         disp_terms.names(), data.y, cfg);

  const json j = joint_fit_to_json(fit, vars, data.row_ids);
  const bool json_stdout = opt.json_path == "-";
  if (!json_stdout) std::cout << render_fit_text(fit);
  if (!opt.json_path.empty()) write_output(opt.json_path, dump_json(j));
}

// ---------------------------------------------------------------------------
// select

struct SelectOptions {
  DataOptions data;
  double alpha = 0.10;
  std::string mean_criterion = "r2:sqrt_n";
  std::string disp_criterion = "r2:1";
  std::string mixture_order = "full_cubic";
  std::string process_order = "quadratic";
  int max_iterations = 10;
  int max_terms = 0;
  std::string json_path;
};

void cmd_select(const SelectOptions& opt) {
  const md::Dataset data = load_data(opt.data);
  const md::VariableSet& vars = data.design.vars;

  const md::TermSet process =
      opt.process_order == "linear"
          ? md::process_monomials_linear(vars)
          : (opt.process_order == "quadratic"
                 ? md::process_monomials_quadratic(vars)
                 : throw md::usage_error("unknown process order '" +
                                         opt.process_order +
                                         "' (expected linear or quadratic)"));
  const md::TermSet pool = md::cross(
      md::scheffe_terms(vars, parse_mixture_order(opt.mixture_order)),
      process);

  md::SelectionConfig cfg(pool);
  cfg.alpha = opt.alpha;
  cfg.criterion = parse_criteria(opt.mean_criterion, opt.disp_criterion);
  cfg.max_iterations = opt.max_iterations;
  cfg.max_terms = opt.max_terms;

  const md::JointSelectionResult result =
      md::select_joint(data.design, data.y, cfg);

  const bool json_stdout = opt.json_path == "-";
  if (!json_stdout) {
    std::cout << render_trace_text(result, cfg) << '\n'
              << render_fit_text(result.fit);
  }
  if (!opt.json_path.empty()) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "selection";
    j["config"] = json{
        {"alpha", cfg.alpha},
        {"mean_criterion", md::criterion_pair_label_mean(cfg.criterion)},
        {"disp_criterion", md::criterion_pair_label_disp(cfg.criterion)},
        {"mixture_order", opt.mixture_order},
        {"process_order", opt.process_order},
        {"max_iterations", cfg.max_iterations},
        {"max_terms", cfg.max_terms}};
    j["variables"] = variables_to_json(vars);
    j["n"] = data.n();
    j["mean_terms"] = result.mean_terms.names();
    j["dispersion_terms"] = result.disp_terms.names();
    j["trace"] = trace_to_json(result.trace);
    j["fit"] = joint_fit_to_json(result.fit, vars, data.row_ids);
    write_output(opt.json_path, dump_json(j));
  }
}

// ---------------------------------------------------------------------------
// moments

struct MomentsOptions {
  std::string fit_path;
  std::string mean_terms, mean_coefs, disp_terms, disp_coefs;
  int n_mixture = 0, n_process = 0;
  std::string noise_mean, noise_var;
  std::vector<std::string> at;
  std::string json_path, csv_path;
};

void cmd_moments(const MomentsOptions& opt) {
  md::VariableSet vars;
  md::TermSet mean_terms{vars}, disp_terms{vars};
  Eigen::VectorXd mean_coefs, disp_coefs;
  md::Family family = md::Family::normal;
  md::Link mean_link = md::Link::identity;
  md::Link disp_link = md::Link::log_link;

  if (!opt.fit_path.empty()) {
    const json j = read_json_file(opt.fit_path);
    const json& fj = j.contains("fit") ? j["fit"] : j;  // select output too
    if (!fj.contains("variables") || !fj.contains("mean") ||
        !fj.contains("dispersion"))
      throw md::data_error("'" + opt.fit_path +
                           "' does not look like a fit JSON document");
    vars.mixture = fj["variables"]["mixture"].get<std::vector<std::string>>();
    vars.process = fj["variables"]["process"].get<std::vector<std::string>>();
    family = md::parse_family(fj["family"].get<std::string>());
    mean_link = md::parse_link(fj["mean_link"].get<std::string>());
    disp_link = md::parse_link(fj["dispersion_link"].get<std::string>());
    auto terms_of = [&](const json& block) {
      std::string joined;
      for (const auto& t : block["terms"]) {
        if (!joined.empty()) joined += ", ";
        joined += t.get<std::string>();
      }
      return md::TermSet::parse(joined, vars);
    };
    mean_terms = terms_of(fj["mean"]);
    mean_coefs = json_to_vec(fj["mean"]["coefficients"], "mean coefficients");
    disp_terms = terms_of(fj["dispersion"]);
    disp_coefs =
        json_to_vec(fj["dispersion"]["coefficients"],
                    "dispersion coefficients");
  } else {
    if (opt.mean_terms.empty() || opt.mean_coefs.empty() ||
        opt.disp_terms.empty() || opt.disp_coefs.empty())
      throw md::usage_error(
          "pass --fit FILE, or all of --mean-terms/--mean-coefs/"
          "--disp-terms/--disp-coefs");
    if (opt.n_mixture < 1)
      throw md::usage_error("--components is required without --fit");
    vars = md::VariableSet::standard(opt.n_mixture, opt.n_process);
    mean_terms = md::TermSet::parse(opt.mean_terms, vars);
    disp_terms = md::TermSet::parse(opt.disp_terms, vars);
    mean_coefs = parse_numbers(opt.mean_coefs, "--mean-coefs");
    disp_coefs = parse_numbers(opt.disp_coefs, "--disp-coefs");
  }

  if (mean_coefs.size() != mean_terms.size())
    throw md::usage_error(fmt("mean model: %d terms but %d coefficients",
                              mean_terms.size(), (int)mean_coefs.size()));
  if (disp_coefs.size() != disp_terms.size())
    throw md::usage_error(fmt("dispersion model: %d terms but %d coefficients",
                              disp_terms.size(), (int)disp_coefs.size()));

  const int r = vars.n_process();
  md::NoiseDistribution noise;
  noise.mean = opt.noise_mean.empty() ? Eigen::VectorXd::Zero(r)
                                      : parse_numbers(opt.noise_mean,
                                                      "--noise-mean");
  noise.variance = opt.noise_var.empty() ? Eigen::VectorXd::Ones(r)
                                         : parse_numbers(opt.noise_var,
                                                         "--noise-var");
  if (noise.mean.size() != r || noise.variance.size() != r)
    throw md::usage_error(
        fmt("noise mean/variance must list %d value(s), one per process "
            "variable", r));

  const md::MomentModel model = md::unconditional_moments(
      mean_terms, mean_coefs, disp_terms, disp_coefs, family, mean_link,
      disp_link, noise);

  if (opt.at.empty())
    throw md::usage_error("no evaluation points: pass --at x1,..,xa (repeatable)");

  const int a = vars.n_mixture();
  std::vector<Eigen::RowVectorXd> points;
  for (const std::string& text : opt.at) {
    const Eigen::VectorXd v = parse_numbers(text, "--at");
    if (v.size() != a)
      throw md::usage_error(fmt("--at '%s': expected %d proportions",
                                text.c_str(), a));
    if (std::abs(v.sum() - 1.0) > 1e-6)
      throw md::usage_error(fmt("--at '%s': proportions sum to %.6f, not 1",
                                text.c_str(), v.sum()));
    points.push_back(v.transpose());
  }

  std::ostringstream csv;
  for (int j = 0; j < a; ++j)
    csv << (j ? "," : "") << vars.mixture[static_cast<size_t>(j)];
  csv << ",mean,variance\n";
  json jpoints = json::array();
  for (const Eigen::RowVectorXd& x : points) {
    const double m = model.mean_at(x);
    const double v = model.variance_at(x);
    for (int j = 0; j < a; ++j) csv << (j ? "," : "") << fmt("%.17g", x[j]);
    csv << fmt(",%.17g,%.17g\n", m, v);
    json pj;
    pj["x"] = vec_to_json(x.transpose());
    pj["mean"] = m;
    pj["variance"] = v;
    jpoints.push_back(std::move(pj));
  }

  auto poly_to_json = [&](const md::MixturePolynomial& poly) {
    json pj;
    std::vector<std::string> names;
    for (const md::Term& t : poly.terms)
      names.push_back(md::term_to_string(t, vars));
    pj["terms"] = names;
    pj["coefficients"] = vec_to_json(poly.coefs);
    return pj;
  };

  if (!opt.json_path.empty()) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "moments";
    j["noise"] = json{{"mean", vec_to_json(noise.mean)},
                      {"variance", vec_to_json(noise.variance)}};
    j["unconditional_mean"] = poly_to_json(model.mean);
    j["log_dispersion"] = poly_to_json(model.log_dispersion);
    json paths = json::array();
    for (size_t k = 0; k < model.noise_paths.size(); ++k) {
      json pk = poly_to_json(model.noise_paths[k]);
      pk["noise_variable"] = vars.process[k];
      pk["noise_variance"] = model.noise_variance[(Eigen::Index)k];
      paths.push_back(std::move(pk));
    }
    j["noise_paths"] = std::move(paths);
    j["points"] = std::move(jpoints);
    write_output(opt.json_path, dump_json(j));
  }
  if (opt.json_path != "-") write_output(opt.csv_path, csv.str());
}

// ---------------------------------------------------------------------------
// simulate

md::CriterionSpec criterion_from_json(const json& j) {
  std::string mean = "r2:sqrt_n", disp = "r2:1";
  if (j.contains("mean")) mean = j["mean"].get<std::string>();
  if (j.contains("disp")) disp = j["disp"].get<std::string>();
  return parse_criteria(mean, disp);
}

struct SimulateOptions {
  std::string config_path;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_mc;
  std::string replicates;
  std::string csv_path, json_path;
};

void cmd_simulate(const SimulateOptions& opt) {
  md::TruthSpec truth = md::TruthSpec::defaults();
  md::StudyConfig cfg;
  cfg.criterion_pairs = {md::CriterionSpec{}};
  cfg.replicate_counts = {2, 4, 7, 11};
  cfg.n_mc = 1000;

  if (!opt.config_path.empty()) {
    const json j = read_json_file(opt.config_path);
    if (j.contains("truth")) {
      const json& tj = j["truth"];
      const int a = tj.value("mixture_components", 3);
      const int r = tj.value("process_variables", 1);
      const md::VariableSet vars = md::VariableSet::standard(a, r);
      truth.vars = vars;
      truth.mean_terms =
          md::TermSet::parse(tj["mean"]["terms"].get<std::string>(), vars);
      truth.mean_coefs =
          json_to_vec(tj["mean"]["coefficients"], "truth mean coefficients");
      truth.disp_terms = md::TermSet::parse(
          tj["dispersion"]["terms"].get<std::string>(), vars);
      truth.disp_coefs = json_to_vec(tj["dispersion"]["coefficients"],
                                     "truth dispersion coefficients");
      if (truth.mean_coefs.size() != truth.mean_terms.size() ||
          truth.disp_coefs.size() != truth.disp_terms.size())
        throw md::data_error("truth: coefficient/term count mismatch");
    }
    if (j.contains("criteria")) {
      cfg.criterion_pairs.clear();
      for (const json& cj : j["criteria"])
        cfg.criterion_pairs.push_back(criterion_from_json(cj));
      if (cfg.criterion_pairs.empty())
        throw md::data_error("config lists no criterion pairs");
    }
    if (j.contains("replicates"))
      cfg.replicate_counts = j["replicates"].get<std::vector<int>>();
    if (j.contains("n_mc")) cfg.n_mc = j["n_mc"].get<int>();
    if (j.contains("master_seed"))
      cfg.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
  }

  if (opt.seed) cfg.master_seed = *opt.seed;
  if (opt.n_mc) cfg.n_mc = *opt.n_mc;
  if (!opt.replicates.empty()) {
    cfg.replicate_counts.clear();
    const Eigen::VectorXd v = parse_numbers(opt.replicates, "--replicates");
    for (Eigen::Index i = 0; i < v.size(); ++i)
      cfg.replicate_counts.push_back(static_cast<int>(v[i]));
  }
  cfg.jobs = opt.jobs;

  const md::McReport report = md::run_study(truth, cfg);
  const std::string csv = md::mcreport_to_csv(report);

  if (!opt.json_path.empty()) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "mc_report";
    j["master_seed"] = report.master_seed;
    j["n_mc"] = report.n_mc;
    j["alpha"] = report.alpha;
    j["failure_flag"] = report.failure_flag;
    json cells = json::array();
    for (const md::McCell& c : report.cells) {
      json cj;
      cj["mean_criterion"] = c.mean_criterion;
      cj["disp_criterion"] = c.disp_criterion;
      cj["replicates"] = c.replicates;
      cj["n"] = c.n;
      cj["n_mc"] = c.n_mc;
      cj["failures"] = c.failures;
      cj["correct"] = c.correct;
      cj["type1"] = c.type1;
      cj["type2"] = c.type2;
      cj["mean_correct"] = c.mean_correct;
      cj["mean_type1"] = c.mean_type1;
      cj["mean_type2"] = c.mean_type2;
      cj["disp_correct"] = c.disp_correct;
      cj["disp_type1"] = c.disp_type1;
      cj["disp_type2"] = c.disp_type2;
      cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    write_output(opt.json_path, dump_json(j));
  }
  if (opt.json_path != "-" || !opt.csv_path.empty())
    write_output(opt.csv_path, csv);
  if (report.failure_flag)
    std::cerr << "warning: at least one cell failed more than 1% of its "
                 "replications\n";
}

// ---------------------------------------------------------------------------
// diagnose

md::GlmFit fit_from_json(const json& j, const std::string& component) {
  const json& fj = j.contains("fit") ? j["fit"] : j;
  if (!fj.contains("mean") || !fj.contains("dispersion") ||
      !fj.contains("observations"))
    throw md::data_error("not a fit JSON document (missing mean/dispersion/"
                         "observations)");
  md::GlmFit fit;
  if (component == "mean") {
    const json& b = fj["mean"];
    fit.family = md::parse_family(fj["family"].get<std::string>());
    fit.link = md::parse_link(fj["mean_link"].get<std::string>());
    fit.fixed_dispersion = 0.0;
    fit.col_names = b["terms"].get<std::vector<std::string>>();
    fit.y = json_to_vec(fj["observations"]["y"], "observations.y");
    fit.beta = json_to_vec(b["coefficients"], "mean.coefficients");
    fit.mu = json_to_vec(b["fitted"], "mean.fitted");
    fit.hat = json_to_vec(b["leverage"], "mean.leverage");
    fit.dev_comp = json_to_vec(b["unit_deviance"], "mean.unit_deviance");
    fit.prior_w = json_to_vec(b["prior_weight"], "mean.prior_weight");
    fit.deviance = b["deviance"].get<double>();
  } else if (component == "dispersion") {
    const json& b = fj["dispersion"];
    fit.family = md::Family::gamma;
    fit.link = md::parse_link(fj["dispersion_link"].get<std::string>());
    fit.fixed_dispersion = 2.0;
    fit.col_names = b["terms"].get<std::vector<std::string>>();
    fit.y = json_to_vec(b["response"], "dispersion.response");
    fit.beta = json_to_vec(b["coefficients"], "dispersion.coefficients");
    fit.mu = json_to_vec(b["fitted"], "dispersion.fitted");
    fit.hat = json_to_vec(b["leverage"], "dispersion.leverage");
    fit.dev_comp =
        json_to_vec(b["unit_deviance"], "dispersion.unit_deviance");
    fit.prior_w = Eigen::VectorXd::Ones(fit.y.size());
    fit.deviance = b["deviance"].get<double>();
  } else {
    throw md::usage_error("unknown component '" + component +
                          "' (expected mean or dispersion)");
  }
  const Eigen::Index n = fit.y.size();
  if (fit.mu.size() != n || fit.hat.size() != n || fit.dev_comp.size() != n ||
      fit.prior_w.size() != n)
    throw md::data_error("per-observation arrays have inconsistent lengths");
  return fit;
}

// Minimal scatter/Q-Q/histogram panels; pure shapes, no external assets.
std::string render_diagnostics_svg(const std::vector<md::DiagnosticsRow>& rows) {
  const int W = 360, H = 340, PAD = 45;
  const int total_w = 3 * W + 40;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_w
      << "\" height=\"" << H + 20 << "\" viewBox=\"0 0 " << total_w << " "
      << H + 20 << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  const size_t n = rows.size();
  std::vector<double> fitted(n), res(n);
  for (size_t i = 0; i < n; ++i) {
    fitted[i] = rows[i].fitted;
    res[i] = rows[i].std_dev_res;
  }
  auto minmax = [](const std::vector<double>& v) {
    double lo = v[0], hi = v[0];
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    return std::make_pair(lo, hi);
  };

  auto panel = [&](int ox, const std::string& title, double x_lo, double x_hi,
                   double y_lo, double y_hi) {
    svg << fmt("<g transform=\"translate(%d,10)\">\n", ox);
    svg << fmt("<text x=\"%d\" y=\"14\" font-family=\"sans-serif\" "
               "font-size=\"13\">%s</text>\n",
               PAD, title.c_str());
    svg << fmt("<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
               "stroke=\"black\"/>\n",
               PAD, H - PAD, W - 10, H - PAD);
    svg << fmt("<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
               "stroke=\"black\"/>\n",
               PAD, 24, PAD, H - PAD);
    svg << fmt("<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" "
               "font-size=\"10\">%.3g</text>\n",
               PAD - 4, H - PAD + 12, x_lo);
    svg << fmt("<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" "
               "font-size=\"10\" text-anchor=\"end\">%.3g</text>\n",
               W - 10, H - PAD + 12, x_hi);
    svg << fmt("<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" "
               "font-size=\"10\">%.3g</text>\n",
               2, H - PAD, y_lo);
    svg << fmt("<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" "
               "font-size=\"10\">%.3g</text>\n",
               2, 30, y_hi);
    return std::make_pair(
        [=](double x) {
          return PAD + (x - x_lo) / (x_hi - x_lo) * (W - 10 - PAD);
        },
        [=](double y) {
          return (H - PAD) - (y - y_lo) / (y_hi - y_lo) * (H - PAD - 24);
        });
  };

  {  // residuals against fitted values
    auto [fx_lo, fx_hi] = minmax(fitted);
    auto [r_lo, r_hi] = minmax(res);
    auto [sx, sy] = panel(0, "standardized residuals vs fitted", fx_lo, fx_hi,
                          r_lo, r_hi);
    if (r_lo < 0.0 && r_hi > 0.0)
      svg << fmt("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                 "stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
                 sx(fx_lo), sy(0.0), sx(fx_hi), sy(0.0));
    for (size_t i = 0; i < n; ++i)
      svg << fmt("<circle cx=\"%.1f\" cy=\"%.1f\" r=\"2.4\" fill=\"#1f5fa8\" "
                 "fill-opacity=\"0.75\"/>\n",
                 sx(fitted[i]), sy(res[i]));
    svg << "</g>\n";
  }

  {  // normal Q-Q plot of the standardized residuals
    std::vector<double> sorted = res;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> theo(n);
    for (size_t i = 0; i < n; ++i)
      theo[i] = md::normal_quantile((static_cast<double>(i) + 0.5) /
                                    static_cast<double>(n));
    auto [t_lo, t_hi] = minmax(theo);
    auto [s_lo, s_hi] = minmax(sorted);
    auto [sx, sy] = panel(W + 20, "normal Q-Q", t_lo, t_hi, s_lo, s_hi);
    const double lo = std::max(t_lo, s_lo), hi = std::min(t_hi, s_hi);
    if (lo < hi)
      svg << fmt("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                 "stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
                 sx(lo), sy(lo), sx(hi), sy(hi));
    for (size_t i = 0; i < n; ++i)
      svg << fmt("<circle cx=\"%.1f\" cy=\"%.1f\" r=\"2.4\" fill=\"#1f5fa8\" "
                 "fill-opacity=\"0.75\"/>\n",
                 sx(theo[i]), sy(sorted[i]));
    svg << "</g>\n";
  }

  {  // histogram of the standardized residuals
    auto [r_lo, r_hi] = minmax(res);
    const int bins = 12;
    std::vector<int> count(bins, 0);
    for (double r : res) {
      int b = static_cast<int>((r - r_lo) / (r_hi - r_lo) * bins);
      b = std::min(std::max(b, 0), bins - 1);
      ++count[static_cast<size_t>(b)];
    }
    const int peak = *std::max_element(count.begin(), count.end());
    auto [sx, sy] = panel(2 * (W + 20), "residual histogram", r_lo, r_hi, 0.0,
                          static_cast<double>(std::max(peak, 1)));
    for (int b = 0; b < bins; ++b) {
      const double x0 = r_lo + (r_hi - r_lo) * b / bins;
      const double x1 = r_lo + (r_hi - r_lo) * (b + 1) / bins;
      const double top = sy(count[static_cast<size_t>(b)]);
      svg << fmt("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                 "fill=\"#7aa6d2\" stroke=\"white\"/>\n",
                 sx(x0), top, sx(x1) - sx(x0), sy(0.0) - top);
    }
    svg << "</g>\n";
  }

  svg << "</svg>\n";
  return svg.str();
}

struct DiagnoseOptions {
  std::string fit_path;
  std::string component = "mean";
  std::string csv_path = "-";
  std::string svg_path;
};

void cmd_diagnose(const DiagnoseOptions& opt) {
  const json j = read_json_file(opt.fit_path);
  const md::GlmFit fit = fit_from_json(j, opt.component);
  const std::vector<md::DiagnosticsRow> rows = md::diagnostics(fit);

  const json& fj = j.contains("fit") ? j["fit"] : j;
  std::vector<std::string> ids;
  if (fj.contains("observations") && fj["observations"].contains("id"))
    ids = fj["observations"]["id"].get<std::vector<std::string>>();

  // Normal plotting positions of each observation's residual rank; sorting
  // rows by this column yields the Q-Q plot ordinates in CSV form.
  const size_t n = rows.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return rows[a].std_dev_res < rows[b].std_dev_res;
  });
  std::vector<double> qq(n);
  for (size_t r = 0; r < n; ++r)
    qq[order[r]] = md::normal_quantile((static_cast<double>(r) + 0.5) /
                                       static_cast<double>(n));

  std::ostringstream csv;
  csv << "id,fitted,deviance_residual,standardized_residual,cooks_distance,"
         "leverage,qq_theoretical\n";
  for (size_t i = 0; i < n; ++i) {
    csv << (i < ids.size() ? ids[i] : std::to_string(i + 1));
    csv << fmt(",%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", rows[i].fitted,
               rows[i].dev_res, rows[i].std_dev_res, rows[i].cooks,
               rows[i].leverage, qq[i]);
  }
  write_output(opt.csv_path, csv.str());
  if (!opt.svg_path.empty())
    write_output(opt.svg_path, render_diagnostics_svg(rows));
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{
      "joint mean-dispersion modeling for mixture experiments with noise "
      "variables"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "meandisp 1.0.0");

  // design
  std::string design_kind;
  int design_a = 3, design_m = 0;
  std::string design_out;
  CLI::App* design =
      app.add_subcommand("design", "emit a mixture design as CSV");
  design->add_option("kind", design_kind, "lattice or centroid")->required();
  design->add_option("components", design_a, "number of mixture components")
      ->required();
  design->add_option("degree", design_m, "lattice degree m (lattice only)");
  design->add_option("--out", design_out, "output file (default stdout)");
  design->callback(
      [&] { cmd_design(design_kind, design_a, design_m, design_out); });

  // fit
  FitOptions fit_opt;
  CLI::App* fit = app.add_subcommand(
      "fit", "joint mean/dispersion fit for fixed term sets");
  add_data_options(fit, fit_opt.data);
  fit->add_option("--mean-terms", fit_opt.mean_terms,
                  "mean model terms, e.g. \"x1,x2,x3,x1*z2\"")
      ->required();
  fit->add_option("--disp-terms", fit_opt.disp_terms,
                  "dispersion model terms")
      ->capture_default_str();
  fit->add_option("--family", fit_opt.family, "mean family (normal|gamma)")
      ->capture_default_str();
  fit->add_option("--mean-link", fit_opt.mean_link,
                  "mean link (identity|log)")
      ->capture_default_str();
  fit->add_option("--disp-link", fit_opt.disp_link, "dispersion link (log)")
      ->capture_default_str();
  fit->add_option("--json", fit_opt.json_path,
                  "write the fit as JSON ('-' for stdout)");
  fit->callback([&] { cmd_fit(fit_opt); });

  // select
  SelectOptions sel_opt;
  CLI::App* select = app.add_subcommand(
      "select", "alternating criterion-guided forward selection");
  add_data_options(select, sel_opt.data);
  select->add_option("--alpha", sel_opt.alpha, "test level for additions")
      ->capture_default_str();
  select
      ->add_option("--mean-criterion", sel_opt.mean_criterion,
                   "r2:1 | r2:sqrt_n | r2:log_n | eaic")
      ->capture_default_str();
  select
      ->add_option("--disp-criterion", sel_opt.disp_criterion,
                   "r2:1 | r2:sqrt_n | r2:log_n | aicc")
      ->capture_default_str();
  select
      ->add_option("--mixture-order", sel_opt.mixture_order,
                   "candidate mixture polynomial "
                   "(linear|quadratic|special_cubic|full_cubic)")
      ->capture_default_str();
  select
      ->add_option("--process-order", sel_opt.process_order,
                   "candidate process polynomial (linear|quadratic)")
      ->capture_default_str();
  select
      ->add_option("--max-iterations", sel_opt.max_iterations,
                   "outer iteration cap")
      ->capture_default_str();
  select->add_option("--max-terms", sel_opt.max_terms,
                     "per-component term cap (0 = unbounded)");
  select->add_option("--json", sel_opt.json_path,
                     "write trace and fit as JSON ('-' for stdout)");
  select->callback([&] { cmd_select(sel_opt); });

  // moments
  MomentsOptions mom_opt;
  CLI::App* moments = app.add_subcommand(
      "moments", "unconditional mean/variance over the noise distribution");
  moments->add_option("--fit", mom_opt.fit_path,
                      "fit JSON produced by 'fit' or 'select'");
  moments->add_option("--mean-terms", mom_opt.mean_terms, "mean model terms");
  moments->add_option("--mean-coefs", mom_opt.mean_coefs,
                      "mean coefficients (comma list)");
  moments->add_option("--disp-terms", mom_opt.disp_terms,
                      "dispersion model terms");
  moments->add_option("--disp-coefs", mom_opt.disp_coefs,
                      "dispersion coefficients (comma list)");
  moments->add_option("--components", mom_opt.n_mixture,
                      "mixture component count (without --fit)");
  moments->add_option("--noise-vars", mom_opt.n_process,
                      "process variable count (without --fit)");
  moments->add_option("--noise-mean", mom_opt.noise_mean,
                      "noise means, one per process variable (default 0)");
  moments->add_option("--noise-var", mom_opt.noise_var,
                      "noise variances, one per process variable (default 1)");
  moments
      ->add_option("--at", mom_opt.at,
                   "evaluation point \"x1,..,xa\" (repeatable)")
      ->take_all();
  moments->add_option("--json", mom_opt.json_path,
                      "write the moment model as JSON ('-' for stdout)");
  moments->add_option("--csv", mom_opt.csv_path,
                      "write the evaluated points as CSV (default stdout)");
  moments->callback([&] { cmd_moments(mom_opt); });

  // simulate
  SimulateOptions sim_opt;
  std::uint64_t sim_seed = 0;
  int sim_nmc = 0;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Monte Carlo evaluation of the selection procedure");
  simulate->add_option("--config", sim_opt.config_path,
                       "study configuration JSON");
  simulate->add_option("--jobs", sim_opt.jobs, "worker threads")
      ->capture_default_str();
  CLI::Option* seed_opt =
      simulate->add_option("--seed", sim_seed, "master seed override");
  CLI::Option* nmc_opt =
      simulate->add_option("--n-mc", sim_nmc, "replication count override");
  simulate->add_option("--replicates", sim_opt.replicates,
                       "replicate counts override (comma list)");
  simulate->add_option("--csv", sim_opt.csv_path,
                       "write the report as CSV (default stdout)");
  simulate->add_option("--json", sim_opt.json_path,
                       "write the report as JSON ('-' for stdout)");
  simulate->callback([&] {
    if (seed_opt->count() > 0) sim_opt.seed = sim_seed;
    if (nmc_opt->count() > 0) sim_opt.n_mc = sim_nmc;
    cmd_simulate(sim_opt);
  });

  // diagnose
  DiagnoseOptions diag_opt;
  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "per-observation diagnostics from a fit JSON");
  diagnose->add_option("--fit", diag_opt.fit_path, "fit JSON file")
      ->required();
  diagnose
      ->add_option("--component", diag_opt.component, "mean or dispersion")
      ->capture_default_str();
  diagnose->add_option("--csv", diag_opt.csv_path,
                       "diagnostics CSV (default stdout)")
      ->capture_default_str();
  diagnose->add_option("--svg", diag_opt.svg_path,
                       "also render scatter/Q-Q/histogram panels as SVG");
  diagnose->callback([&] { cmd_diagnose(diag_opt); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const md::usage_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const md::data_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const md::numeric_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
