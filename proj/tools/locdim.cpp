#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "locdim/basis.hpp"
#include "locdim/bspline.hpp"
#include "locdim/constructive/verify.hpp"
#include "locdim/harness/csv.hpp"
#include "locdim/harness/experiment.hpp"
#include "locdim/harness/report.hpp"
#include "locdim/json_io.hpp"
#include "locdim/targets.hpp"

using namespace locdim;

namespace {

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    double v;
    if (!detail::parse_number(tok, v)) throw std::invalid_argument("cannot parse number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) std::cout << dump_json(j) << "\n";
  else write_json_file(out_path, j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse additive network regression toolkit"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run a simulation experiment from a config file");
  std::string run_config, run_out;
  bool full_scale = false;
  int run_threads = 0;
  run->add_option("--config", run_config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  run->add_flag("--full-scale", full_scale, "Paper-size repetitions, evaluation grid and parameter grids");
  run->add_option("--out", run_out, "Results JSON path (stdout table only when omitted)");
  run->add_option("--threads", run_threads, "Worker threads (results do not depend on it)");

  // table
  auto* table = app.add_subcommand("table", "Render a results file as a text table");
  std::string table_in;
  bool table_csv = false;
  table->add_option("results", table_in, "Results JSON")->required()->check(CLI::ExistingFile);
  table->add_flag("--csv", table_csv, "Per-repetition CSV instead of the summary table");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Estimate the noise scale lambda of a target");
  std::string cal_target = "m1";
  long cal_samples = 10000;
  int cal_repeats = 10;
  std::uint64_t cal_seed = 1;
  cal->add_option("--target", cal_target, "m1, m2, m3 or fig2");
  cal->add_option("--samples", cal_samples, "Draws per repeat");
  cal->add_option("--repeats", cal_repeats, "Repeats for the median");
  cal->add_option("--seed", cal_seed, "Seed");

  // verify-lemma
  auto* vl = app.add_subcommand("verify-lemma", "Measure a gadget network's sup error against its bound");
  std::string vl_lemma = "identity";
  double vl_R = 1e3, vl_a = 1.0, vl_gap = 0.25, vl_start = 0.0;
  int vl_points = 2001, vl_degree = 1, vl_index = 0, vl_K = 4;
  bool vl_enforce = false;
  vl->add_option("--lemma", vl_lemma, "identity, square, mult, relu, trunc or bspline");
  vl->add_option("--R", vl_R, "Scale R");
  vl->add_option("--a", vl_a, "Domain half-width");
  vl->add_option("--points", vl_points, "Grid size");
  vl->add_option("--degree", vl_degree, "B-spline degree M");
  vl->add_option("--index", vl_index, "B-spline index j");
  vl->add_option("--knot-start", vl_start, "B-spline knot t_0");
  vl->add_option("--knot-gap", vl_gap, "B-spline knot spacing");
  vl->add_option("--K", vl_K, "Number of interior intervals");
  vl->add_flag("--enforce", vl_enforce, "Refuse an R below the B-spline lemma's minimum");

  // oracle eval
  auto* oracle = app.add_subcommand("oracle", "Reference evaluations");
  oracle->require_subcommand(1);
  auto* oeval = oracle->add_subcommand("eval", "Evaluate a target, basis function, polytope squeeze or B-spline");
  std::string o_target, o_basis, o_polytope, o_x, o_knots;
  int o_degree = 1, o_index = 0;
  oeval->add_option("--x", o_x, "Comma-separated point")->required();
  oeval->add_option("--target", o_target, "Regression target name");
  oeval->add_option("--basis", o_basis, "Basis function JSON file")->check(CLI::ExistingFile);
  oeval->add_option("--polytope", o_polytope, "Polytope JSON file")->check(CLI::ExistingFile);
  oeval->add_option("--knots", o_knots, "Comma-separated knots t_{-M} .. t_{K+M}");
  oeval->add_option("--degree", o_degree, "B-spline degree");
  oeval->add_option("--index", o_index, "B-spline index");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a sparse network to a CSV dataset with split-sample selection");
  std::string f_data, f_target, f_config, f_out, f_norm = "minmax";
  std::vector<std::string> f_features;
  fit->add_option("--data", f_data, "CSV with header row")->required()->check(CLI::ExistingFile);
  fit->add_option("--target-column", f_target, "Response column")->required();
  fit->add_option("--features", f_features, "Feature columns (default: all others)");
  fit->add_option("--normalize", f_norm, "none or minmax");
  fit->add_option("--config", f_config, "Fit config JSON")->check(CLI::ExistingFile);
  fit->add_option("--out", f_out, "Output JSON");

  // real
  auto* real = app.add_subcommand("real", "Real-data protocol: fit on a random subset, score on the rest");
  std::string r_data, r_target, r_out, r_norm = "minmax", r_grids;
  std::vector<std::string> r_features, r_estimators{"neural-sc", "neural-fc", "rbf", "knn", "mars"};
  long r_nfit = 500;
  std::uint64_t r_seed = 1;
  real->add_option("--data", r_data, "CSV with header row")->required()->check(CLI::ExistingFile);
  real->add_option("--target-column", r_target, "Response column")->required();
  real->add_option("--features", r_features, "Feature columns (default: all others)");
  real->add_option("--normalize", r_norm, "none or minmax");
  real->add_option("--n-fit", r_nfit, "Rows used for fitting");
  real->add_option("--seed", r_seed, "Seed");
  real->add_option("--estimators", r_estimators, "Estimators to compare");
  real->add_option("--grids", r_grids, "Parameter grid JSON")->check(CLI::ExistingFile);
  real->add_option("--out", r_out, "Output JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ExperimentConfig cfg = experiment_config_from_json(read_json_file(run_config), full_scale);
      if (run_threads > 0) cfg.threads = run_threads;
      ResultTable t = run_experiment(cfg);
      if (!run_out.empty()) write_json_file(run_out, to_json(t));
      std::cout << render_table(t);
    } else if (*table) {
      ResultTable t = result_table_from_json(read_json_file(table_in));
      std::cout << (table_csv ? render_csv(t) : render_table(t));
    } else if (*cal) {
      auto r = calibrate_lambda_detailed(make_target(cal_target), cal_samples, cal_repeats, cal_seed, default_threads());
      json j = {{"target", cal_target}, {"lambda", r.lambda}, {"region_iqr", json::array()},
                {"region_samples", r.piece_samples}, {"warnings", r.warnings}};
      for (double v : r.piece_iqr) j["region_iqr"].push_back(std::isnan(v) ? json(nullptr) : json(v));
      std::cout << dump_json(j) << "\n";
    } else if (*vl) {
      constructive::LemmaCheck c;
      if (vl_lemma == "bspline") {
        KnotSequence ks = KnotSequence::uniform(vl_start, vl_gap, vl_K, vl_degree);
        c = constructive::verify_bspline(vl_degree, vl_index, ks, vl_R, vl_a, 1.0 / vl_gap, vl_points,
                                         vl_enforce ? constructive::Precondition::enforce
                                                    : constructive::Precondition::relax);
      } else {
        c = constructive::verify_lemma(vl_lemma, vl_R, vl_a, vl_points);
      }
      std::cout << dump_json(to_json(c)) << "\n";
      return c.within() ? 0 : 2;
    } else if (*oeval) {
      std::vector<double> x = parse_list(o_x);
      json j = {{"x", x}};
      if (!o_target.empty()) {
        Target t = make_target(o_target);
        j["target"] = o_target;
        j["value"] = t(x);
        if (t.piece_of) j["region"] = t.piece_of(x);
      } else if (!o_basis.empty()) {
        j["value"] = basis_eval(basis_from_json(read_json_file(o_basis)), x);
      } else if (!o_polytope.empty()) {
        Polytope P = polytope_from_json(read_json_file(o_polytope));
        j["squeeze"] = P.squeeze(x);
        j["inside_inner"] = P.contains_inner(x);
        j["inside_outer"] = P.contains_outer(x);
      } else if (!o_knots.empty()) {
        if (x.size() != 1) throw std::invalid_argument("B-spline evaluation takes a scalar --x");
        KnotSequence ks(parse_list(o_knots), o_degree);
        j["value"] = bspline_eval(ks, o_index, o_degree, x[0]);
      } else {
        throw std::invalid_argument("oracle eval needs one of --target, --basis, --polytope, --knots");
      }
      std::cout << dump_json(j) << "\n";
    } else if (*fit) {
      IngestResult in = ingest_csv(f_data, f_target, f_features, parse_normalization(f_norm));
      json cj = f_config.empty() ? json::object() : read_json_file(f_config);
      FitConfig cfg = fit_config_from_json(cj);
      if (!cj.contains("alpha")) cfg.alpha = default_alpha(in.data.n());
      if (!cj.contains("beta")) cfg.beta = default_beta(in.data.n());
      double split = cj.value("split_fraction", 0.8);
      std::vector<int> mstars = cj.value("mstar_candidates", default_mstar_candidates(in.data.n()));
      SparseSelection sel = select_model(in.data, mstars, cfg, split);
      json reports = json::array();
      for (const auto& r : sel.reports) {
        json rj = to_json(r);
        rj.erase("risk_trace");
        reports.push_back(rj);
      }
      json out = {{"rows_read", in.rows_read},     {"rows_dropped", in.rows_dropped},
                  {"features", in.feature_names},  {"warnings", in.warnings},
                  {"config", to_json(cfg)},        {"mstar", sel.params.Mstar},
                  {"test_risks", sel.test_risks},  {"reports", reports},
                  {"network", to_json(sel.net)}};
      emit(out, f_out);
    } else if (*real) {
      IngestResult in = ingest_csv(r_data, r_target, r_features, parse_normalization(r_norm));
      auto [fit_set, rest] = real_data_split(in.data, r_nfit, r_seed);
      EstimatorGrids g;
      if (!r_grids.empty()) grids_from_json(read_json_file(r_grids), g);
      json res = json::array();
      for (size_t e = 0; e < r_estimators.size(); ++e) {
        auto fe = fit_estimator(r_estimators[e], fit_set, g, 0.8, derive_seed(r_seed, {0xf17ULL, e}));
        res.push_back({{"name", r_estimators[e]},
                       {"normalized_error", real_normalized_error(*fe.predictor, fit_set, rest)},
                       {"selection", fe.selection}});
      }
      json out = {{"rows_read", in.rows_read}, {"rows_dropped", in.rows_dropped}, {"n_fit", r_nfit},
                  {"n_eval", rest.n()},        {"warnings", in.warnings},        {"results", res}};
      emit(out, r_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
