// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "locdim/basis.hpp"
#include "locdim/bspline.hpp"
#include "locdim/constructive/builders.hpp"
#include "locdim/constructive/verify.hpp"
#include "locdim/fit.hpp"
#include "locdim/harness/experiment.hpp"
#include "locdim/json_io.hpp"
#include "locdim/targets.hpp"

using namespace locdim;
using namespace locdim::constructive;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail, double seconds) {
  std::printf("%s [%d] %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

// ---- 1: gadget lemmas ----

void lemma_suite() {
  Timer tm;
  bool ok = true;
  std::string worst;
  double worst_ratio = 0;
  for (const char* name : {"identity", "square", "mult", "relu", "trunc"}) {
    double e2 = 0, e4 = 0;
    for (double R : {1e2, 1e3, 1e4}) {
      LemmaCheck c = verify_lemma(name, R, 1.0, 2001);
      if (!(c.measured <= c.bound + fp_slack(R, 1.0))) {
        ok = false;
        worst += std::string(" ") + name + fmt("@R=%g:%.3g>%.3g", R, c.measured, c.bound);
      }
      if (R == 1e2) e2 = c.measured;
      if (R == 1e4) e4 = c.measured;
    }
    double ratio = e4 / e2;
    worst_ratio = std::max(worst_ratio, ratio);
    if (!(ratio <= 0.02)) {
      ok = false;
      worst += std::string(" ") + name + fmt(" ratio %.4f", ratio);
    }
  }
  double s = tm.seconds();
  ok = ok && s < 10.0;
  report(1, ok, "gadget lemmas within bound, 1/R scaling", fmt("max error ratio R=1e4/R=1e2 %.4f", worst_ratio) + worst, s);
}

// ---- 2: B-spline networks ----

int class_width(int M) {
  int w = 16;
  for (int k = 1; k < M; ++k) w *= 2;
  for (int k = 2; k <= M; ++k) w += 1 << (M - k + 1);
  return w;
}

void bspline_suite() {
  Timer tm;
  bool ok = true;
  std::string detail;
  const double R = 1e5, a = 1.0, n = 4.0;
  // knots 0, .25, .5, .75, 1 written as t_{-M} .. t_{K+M}
  std::vector<KnotSequence> seqs{KnotSequence::uniform(0.25, 0.25, 2, 1), KnotSequence::uniform(0.5, 0.25, 0, 2)};
  for (const auto& ks : seqs) {
    int M = ks.degree();
    for (int j = ks.first_index(); ks.valid_index(j, M); ++j) {
      LemmaCheck c = verify_bspline(M, j, ks, R, a, n, 2001, Precondition::relax);
      bool shape = c.hidden_layers == M + 1 && c.width == class_width(M);
      bool good = c.within() && shape;
      ok = ok && good;
      detail += fmt(" M=%g j=%g gap %.2e (L=%g)", M, j, c.measured, c.hidden_layers) +
                (good ? "" : fmt(" bound %.2e width %g", c.bound, c.width));
    }
  }
  report(2, ok, "B-spline networks vs Cox-de Boor, class shape", detail, tm.seconds());
}

// ---- 3: basis and linear-combination networks ----

GeneralizedBasisFunction random_basis(std::mt19937_64& rng, int K1, bool with_spline) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> coord(0, 1), idx(-1, 2);
  GeneralizedBasisFunction b;
  b.dim = 2;
  if (with_spline) b.splines.push_back({coord(rng), idx(rng), KnotSequence::uniform(-0.75, 0.25, 6, 1)});
  for (int k = 0; k < K1; ++k) b.hinges.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
  return b;
}

double grid_gap(const std::function<double(const std::vector<double>&)>& net, const std::function<double(const std::vector<double>&)>& ref) {
  double gap = 0;
  for (int i = 0; i <= 40; ++i)
    for (int j = 0; j <= 40; ++j) {
      std::vector<double> x{-1.0 + i * 0.05, -1.0 + j * 0.05};
      gap = std::max(gap, std::abs(net(x) - ref(x)));
    }
  return gap;
}

void basis_suite() {
  Timer tm;
  bool ok = true;
  std::string detail;
  std::mt19937_64 rng(2024);
  const double n = 4.0, a = 1.0;
  const int shapes[5][2] = {{0, 1}, {1, 1}, {2, 1}, {1, 0}, {2, 0}};  // {K1, spline}
  for (auto& s : shapes) {
    auto b = random_basis(rng, s[0], s[1] != 0);
    auto bn = build_basis_net(b, n, a);
    double gap = grid_gap([&](const std::vector<double>& x) { return bn(x); }, [&](const std::vector<double>& x) { return b(x); });
    bool good = gap <= bn.theoretical_bound + fp_slack(bn.scales, 1.0);
    ok = ok && good;
    detail += fmt(" K1=%g/J=%g gap %.1e", s[0], s[1], gap);
  }
  std::vector<GeneralizedBasisFunction> bs{random_basis(rng, 1, true), random_basis(rng, 1, true), random_basis(rng, 1, true)};
  std::vector<double> w{0.5, -1.5, 1.0};
  auto lcb = build_lcb_net(w, bs, n, a);
  double bmax = 0;
  for (const auto& b : bs) bmax = std::max(bmax, build_basis_net(b, n, a).theoretical_bound);
  auto ref = [&](const std::vector<double>& x) {
    double v = 0;
    for (size_t i = 0; i < bs.size(); ++i) v += w[i] * bs[i](x);
    return v;
  };
  double gap = grid_gap([&](const std::vector<double>& x) { return lcb.net(x); }, ref);
  bool good = gap <= 3.0 * 1.5 * bmax + 3.0 * 1.5 * fp_slack(lcb.scales, 1.0);
  ok = ok && good;
  detail += fmt(" lcb gap %.1e vs %.1e", gap, 3.0 * 1.5 * bmax);
  report(3, ok, "basis networks and I=3 combination within composed bound", detail, tm.seconds());
}

// ---- 4: polytope squeeze ----

// h_i written out as the clipped ramp min(1, max(0, (b + delta - a^T x) / delta))
double ramp_product(const Polytope& P, const std::vector<double>& x) {
  double p = 1.0;
  for (const auto& h : P.halfspaces) {
    double s = 0;
    for (size_t k = 0; k < x.size(); ++k) s += h.a[k] * x[k];
    p *= std::min(1.0, std::max(0.0, (h.b + h.delta - s) / h.delta));
  }
  return p;
}

void polytope_suite() {
  Timer tm;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> dd(1, 4), kk(1, 3);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> un(0.2, 1.0), ub(-0.5, 0.5), udelta(0.05, 0.3), ux(-1.5, 1.5);
  double max_dev = 0;
  bool ones = true, zeros = true, terms = true;
  long inner = 0, outer = 0;
  for (int trial = 0; trial < 20; ++trial) {
    int d = dd(rng), K1 = kk(rng);
    Polytope P;
    for (int i = 0; i < K1; ++i) {
      std::vector<double> av(d);
      double s = 0;
      for (auto& v : av) {
        v = nd(rng);
        s += v * v;
      }
      double scale = un(rng) / std::sqrt(s);
      for (auto& v : av) v *= scale;
      P.halfspaces.push_back({av, ub(rng), udelta(rng)});
    }
    auto e = polytope_squeeze_expand(P);
    terms = terms && e.bases.size() == (size_t{1} << K1);
    std::vector<double> x(d);
    for (int k = 0; k < 1000; ++k) {
      for (auto& v : x) v = ux(rng);
      double ex = e(x);
      max_dev = std::max(max_dev, std::abs(ex - ramp_product(P, x)));
      if (P.contains_inner(x)) {
        ++inner;
        ones = ones && std::abs(ex - 1.0) <= 1e-12 && std::abs(P.squeeze(x) - 1.0) <= 1e-12;
      }
      if (!P.contains_outer(x)) {
        ++outer;
        zeros = zeros && std::abs(ex) <= 1e-12 && std::abs(P.squeeze(x)) <= 1e-12;
      }
    }
  }
  bool ok = max_dev <= 1e-12 && ones && zeros && terms && inner > 0 && outer > 0;
  report(4, ok, "polytope squeeze expansion",
         fmt("max |expansion - product| %.2e, %g inner / %g outer samples", max_dev, double(inner), double(outer)) +
             (ones ? "" : " not 1 inside") + (zeros ? "" : " not 0 outside") + (terms ? "" : " wrong term count"),
         tm.seconds());
}

// ---- 5: spline oracle ----

// de Boor's triangle for the coefficient vector e_j on the interval [t_i, t_{i+1}).
double de_boor_unit(const KnotSequence& ks, int j, int M, double x) {
  int i = 0;
  while (i + 1 < ks.K() && x >= ks.t(i + 1)) ++i;
  std::vector<double> d(M + 1);
  for (int r = 0; r <= M; ++r) d[r] = (i - M + r == j) ? 1.0 : 0.0;
  for (int r = 1; r <= M; ++r)
    for (int k = M; k >= r; --k) {
      int idx = i - M + k;
      double al = (x - ks.t(idx)) / (ks.t(idx + M + 1 - r) - ks.t(idx));
      d[k] = (1.0 - al) * d[k - 1] + al * d[k];
    }
  return d[M];
}

void spline_suite() {
  Timer tm;
  bool unity = true, nonneg = true, local = true;
  double max_sum_dev = 0, max_db = 0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ug(0.3, 1.5);
  for (int M = 0; M <= 3; ++M) {
    for (int variant = 0; variant < 2; ++variant) {
      const int K = 5;
      std::vector<double> v{-1.0};
      for (int k = 1; k < K + 2 * M + 1; ++k) v.push_back(v.back() + (variant == 0 ? 0.5 : ug(rng)));
      KnotSequence ks(v, M);
      for (int s = 0; s <= 400; ++s) {
        double x = ks.t(0) + (ks.t(K) - ks.t(0)) * s / 400.0;
        double sum = 0;
        for (int j = -M; j <= K - 1; ++j) {
          double b = bspline_eval(ks, j, M, x);
          sum += b;
          nonneg = nonneg && b >= 0;
          if (x < ks.t(j) || x > ks.t(j + M + 1)) local = local && b == 0.0;
          if (x < ks.t(K)) max_db = std::max(max_db, std::abs(b - de_boor_unit(ks, j, M, x)));
        }
        max_sum_dev = std::max(max_sum_dev, std::abs(sum - 1.0));
      }
      // outside the whole span every spline vanishes
      for (int j = -M; j <= K - 1; ++j)
        local = local && bspline_eval(ks, j, M, ks.t(-M) - 0.1) == 0.0 && bspline_eval(ks, j, M, ks.t(K + M) + 0.1) == 0.0;
    }
  }
  unity = max_sum_dev <= 1e-12;
  KnotSequence cardinal({0.0, 1.0, 2.0, 3.0, 4.0}, 2);
  double mid = bspline_eval(cardinal, -2, 2, 1.5);  // support [0, 3]
  bool midpoint = std::abs(mid - 0.75) <= 1e-15;
  bool agree = max_db <= 1e-12;
  bool ok = unity && nonneg && local && midpoint && agree;
  report(5, ok, "spline oracle",
         fmt("partition dev %.1e, de Boor dev %.1e, midpoint %.15g", max_sum_dev, max_db, mid) +
             (nonneg ? "" : " negative value") + (local ? "" : " support leak"),
         tm.seconds());
}

// ---- 6: gradient and optimizer ----

template <class Net>
void randomize(Net& net, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  net.for_each_parameter([&](double& v) { v = u(rng); });
}

Dataset random_dataset(int n, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset D{Eigen::MatrixXd(n, d), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) D.X(i, j) = u(rng);
    D.Y(i) = 2.0 * u(rng) - 1.0;
  }
  return D;
}

template <class Net>
double fd_deviation(const Net& net, const Dataset& D) {
  Eigen::VectorXd g = gradient(net, D);
  Net probe = net;
  Eigen::VectorXd theta = get_parameters(net);
  double worst = 0;
  const double h = 1e-6;
  for (long i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp(i) += h;
    tm(i) -= h;
    set_parameters(probe, tp);
    double fp = empirical_risk(probe, D);
    set_parameters(probe, tm);
    double fm = empirical_risk(probe, D);
    double fd = (fp - fm) / (2 * h);
    worst = std::max(worst, std::abs(g(i) - fd) / std::max(std::abs(fd), 1e-4));
  }
  return worst;
}

void optimizer_suite() {
  Timer tm;
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> dd(1, 3), ll(1, 3), rr(1, 4), mm(1, 3);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Dataset D;
    if (trial % 2 == 0) {
      DenseNetwork net(dd(rng), ll(rng), rr(rng), 10.0);
      randomize(net, rng, 1.5);
      D = random_dataset(8, net.input_dim(), rng);
      worst = std::max(worst, fd_deviation(net, D));
    } else {
      SparseAdditiveNetwork net(dd(rng), ll(rng), rr(rng), mm(rng), 10.0);
      randomize(net, rng, 1.5);
      D = random_dataset(8, net.input_dim(), rng);
      worst = std::max(worst, fd_deviation(net, D));
    }
  }

  DenseNetwork teacher(1, 1, 3, 10.0);
  randomize(teacher, rng, 2.0);
  Dataset D{Eigen::MatrixXd(50, 1), Eigen::VectorXd(50)};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    D.X(i, 0) = u(rng);
    D.Y(i) = teacher(std::vector<double>{D.X(i, 0)});
  }
  FitConfig cfg;
  cfg.L = 1;
  cfg.r = 3;
  cfg.alpha = default_alpha(50);
  cfg.restarts = 5;
  cfg.seed = 7;
  DenseNetwork student(1, 1, 3, cfg.alpha);
  FitReport rep = train(student, D, cfg);
  bool monotone = !rep.risk_trace.empty();
  for (size_t i = 1; i < rep.risk_trace.size(); ++i) monotone = monotone && rep.risk_trace[i] <= rep.risk_trace[i - 1];

  // the accepted-step sequence of a sparse fit on noisy data
  SparseAdditiveNetwork sp(2, 2, 3, 2, 1e3);
  FitConfig cs;
  cs.L = 2;
  cs.r = 3;
  cs.alpha = 1e3;
  cs.seed = 9;
  cs.max_iters = 200;
  FitReport rs = train(sp, random_dataset(40, 2, rng), cs);
  for (size_t i = 1; i < rs.risk_trace.size(); ++i) monotone = monotone && rs.risk_trace[i] <= rs.risk_trace[i - 1];

  bool ok = worst <= 1e-5 && rep.final_risk <= 1e-6 && monotone;
  report(6, ok, "gradient and training",
         fmt("max relative gradient deviation %.1e, realizable risk %.1e", worst, rep.final_risk) +
             (monotone ? ", traces non-increasing" : ", trace increased"),
         tm.seconds());
}

// ---- 7: lambda calibration ----

double lambda_m1_full = -1;

void lambda_suite() {
  const char* names[3] = {"m1", "m2", "m3"};
  const double expect[3] = {2.72, 6.28, 12.2};
  const double full_tol[3] = {0.05, 0.10, 0.10};
  Timer tm;
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    double lam = calibrate_lambda(make_target(names[k]), 100000, 100, 1);
    if (k == 0) lambda_m1_full = lam;
    bool good = std::abs(lam - expect[k]) <= full_tol[k] * expect[k];
    ok = ok && good;
    detail += std::string(" ") + names[k] + fmt("=%.3f", lam);
  }
  double full_s = tm.seconds();
  ok = ok && full_s < 600.0;
  Timer td;
  bool desk_ok = true;
  std::string desk;
  for (int k = 0; k < 3; ++k) {
    double lam = calibrate_lambda(make_target(names[k]), 10000, 10, 1);
    bool good = std::abs(lam - expect[k]) <= 0.15 * expect[k];
    desk_ok = desk_ok && good;
    desk += std::string(" ") + names[k] + fmt("=%.3f", lam);
  }
  report(7, ok && desk_ok, "lambda calibration (targets 2.72, 6.28, 12.2)",
         "full" + detail + " in " + fmt("%.0f s;", full_s) + " desk" + desk, tm.seconds());
}

// ---- 8: normalizer ----

void normalizer_suite() {
  Timer tm;
  Target t = make_target("m1");
  double lam = lambda_m1_full > 0 ? lambda_m1_full : calibrate_lambda(t, 100000, 100, 1);
  const double sd = 0.05 * lam;
  EvalSet full_eval = make_eval_set(t, 100000, derive_seed(1, {0xe7a1ULL}));
  double full = average_normalizer(t, 100, sd, full_eval, derive_seed(1, {0xde9ULL}), 50);
  EvalSet desk_eval = make_eval_set(t, 10000, derive_seed(1, {0xe7a1ULL}));
  double desk = average_normalizer(t, 100, sd, desk_eval, derive_seed(1, {0xde9ULL}), 50);
  bool ok = full >= 29.4 * 0.95 && full <= 29.5 * 1.05 && desk >= 29.4 * 0.90 && desk <= 29.5 * 1.10;
  report(8, ok, "m1 constant-predictor normalizer (29.4-29.5)", fmt("full %.4f, desk %.4f", full, desk), tm.seconds());
}

// ---- 9 and 10: estimation sanity and determinism ----

ExperimentConfig sanity_config(long n) {
  ExperimentConfig c;
  c.target = "m1";
  c.n = n;
  c.noise_sigma = 0.05;
  c.repetitions = 5;
  c.estimators = {"neural-sc", "knn"};
  c.seed = 1;
  return c;
}

std::string first_run_json;

void estimation_suite() {
  Timer tm;
  ResultTable r100 = run_experiment(sanity_config(100));
  ResultTable r200 = run_experiment(sanity_config(200));
  first_run_json = dump_json(to_json(r200));
  double sc100 = r100.estimators[0].median, sc200 = r200.estimators[0].median, knn200 = r200.estimators[1].median;
  double s = tm.seconds();
  bool ok = sc200 < 1.0 && sc200 < sc100 && knn200 >= 0.3 && knn200 <= 0.9 && s < 900.0;
  report(9, ok, "m1 estimation sanity",
         fmt("neural-sc n=100 %.4f, n=200 %.4f; knn n=200 %.4f", sc100, sc200, knn200), s);
}

void determinism_suite() {
  Timer tm;
  std::string again = dump_json(to_json(run_experiment(sanity_config(200))));
  bool ok = !first_run_json.empty() && again == first_run_json;
  report(10, ok, "byte-identical results on re-run", fmt("%g bytes", double(again.size())), tm.seconds());
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> suites{lemma_suite,      bspline_suite, basis_suite,      polytope_suite,
                                                  spline_suite,     optimizer_suite, lambda_suite, normalizer_suite,
                                                  estimation_suite, determinism_suite};
  for (size_t i = 0; i < suites.size(); ++i) {
    try {
      suites[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, "criterion", std::string("exception: ") + e.what(), 0.0);
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, suites.size());
  return failures == 0 ? 0 : 1;
}
