// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Criterion 9 needs an external dataset
// (FABLE_YOUTUBE_JSON) and reports SKIP without one.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fable/fable.hpp"

namespace fs = std::filesystem;
using namespace fable;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome size_robustness() {
  BenchOptions opt;
  opt.sizes = {1000, 5000, 10000};
  opt.runs = 10;
  opt.methods = {Method::kMv, Method::kIbcc, Method::kEbcc, Method::kFable};
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = bench_size(opt);
  auto mean = [&](Method m, std::size_t n) {
    for (const auto& r : rows)
      if (r.method == m && r.size == n) return r.mean;
    return std::nan("");
  };
  std::ostringstream os;
  double mv_lo = 1, mv_hi = 0;
  bool fable_ok = true;
  for (std::size_t n : opt.sizes) {
    const double mv = mean(Method::kMv, n), fb = mean(Method::kFable, n);
    mv_lo = std::min(mv_lo, mv);
    mv_hi = std::max(mv_hi, mv);
    fable_ok = fable_ok && fb >= mv - 0.01;
    os << " N=" << n << "[mv " << fmt("%.3f", mv) << " ibcc " << fmt("%.3f", mean(Method::kIbcc, n)) << " ebcc "
       << fmt("%.3f", mean(Method::kEbcc, n)) << " fable " << fmt("%.3f", fb) << "]";
  }
  const bool mv_flat = mv_hi - mv_lo < 0.02;
  const double ibcc_drop = mean(Method::kIbcc, 1000) - mean(Method::kIbcc, 10000);
  const bool ibcc_ok = ibcc_drop >= 0.03;
  os << " mv_spread=" << fmt("%.4f", mv_hi - mv_lo) << " ibcc_drop=" << fmt("%.4f", ibcc_drop)
     << " time=" << fmt("%.0fs", seconds_since(t0));
  return {mv_flat && fable_ok && ibcc_ok, os.str()};
}

Outcome correlation_study() {
  CorrStudyOptions opt;  // 50 trials, N = 1000, psi ~ Uniform(1, 3), seed 0
  const auto res = study_corr(opt);
  if (!res.pearson) return {false, "pearson undefined: " + res.pearson_error};
  std::ostringstream os;
  os << " trials=" << res.trials.size() << " r=" << fmt("%.4f", res.pearson->r) << " p=" << fmt("%.3g", res.pearson->p);
  return {res.pearson->r > 0.2 && res.pearson->p < 0.05, os.str()};
}

Dataset random_crowd(std::size_t n, int l, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cls(0, k - 1);
  std::uniform_real_distribution<double> u;
  Dataset d;
  d.num_classes = k;
  d.features = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
  d.lf_labels.resize(static_cast<Eigen::Index>(n), l);
  std::vector<double> acc(static_cast<std::size_t>(l));
  for (auto& a : acc) a = 0.4 + 0.5 * u(rng);
  for (Eigen::Index i = 0; i < d.lf_labels.rows(); ++i) {
    const int z = cls(rng);
    for (Eigen::Index j = 0; j < l; ++j) {
      int y = kAbstain;
      if (u(rng) > 0.3) y = u(rng) < acc[static_cast<std::size_t>(j)] ? z : cls(rng);
      d.lf_labels(i, j) = y;
    }
  }
  return d;
}

Outcome elbo_monotone() {
  double worst = 0.0;
  std::size_t sweeps = 0;
  for (std::uint64_t t = 0; t < 5; ++t) {
    const Dataset d = random_crowd(80 + 30 * t, 4 + static_cast<int>(t), 2 + static_cast<int>(t % 3), 500 + t);
    EbccOptions o;
    o.seed = t;
    o.track_elbo = true;
    o.max_iters = 300;
    const auto p = ebcc_fit(d, o);
    for (std::size_t s = 1; s < p.elbo_trace.size(); ++s) worst = std::min(worst, p.elbo_trace[s] - p.elbo_trace[s - 1]);
    sweeps += p.elbo_trace.size();
  }
  return {worst >= -1e-8, " instances=5 sweeps=" + std::to_string(sweeps) + " worst_step=" + fmt("%.3g", worst)};
}

Outcome augmentation_identities() {
  const double at_zero = std::abs(pg_mean(1.0, 0.0) - 0.25);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ub(0.0, 10.0), uc(-20.0, 20.0);
  double pg_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double b = ub(rng), c = uc(rng);
    pg_err = std::max(pg_err, std::abs(pg_mean(b, c) - b / (2 * c) * std::tanh(c / 2)));
  }
  // Dirichlet: E[log theta] against 1e6 draws via normalized Gammas. About
  // 30 components are compared at 3 SE each, so an exact formula still
  // fails a single draw with probability near 8%.
  std::uniform_real_distribution<double> ua(0.2, 6.0);
  std::uniform_int_distribution<int> uk(2, 5);
  double worst_z = 0.0;
  int compared = 0;
  for (int t = 0; t < 10; ++t) {
    const int k = uk(rng);
    Eigen::VectorXd alpha(k);
    for (int i = 0; i < k; ++i) alpha(i) = ua(rng);
    std::vector<std::gamma_distribution<double>> g;
    for (int i = 0; i < k; ++i) g.emplace_back(alpha(i), 1.0);
    const int draws = 1000000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(k), sum2 = Eigen::VectorXd::Zero(k), x(k);
    for (int s = 0; s < draws; ++s) {
      for (int i = 0; i < k; ++i) x(i) = g[static_cast<std::size_t>(i)](rng);
      const Eigen::ArrayXd lx = (x / x.sum()).array().log();
      sum.array() += lx;
      sum2.array() += lx.square();
    }
    const Eigen::VectorXd e = dirichlet_log_expectation(alpha);
    for (int i = 0; i < k; ++i) {
      const double m = sum(i) / draws;
      const double se = std::sqrt((sum2(i) / draws - m * m) / draws);
      worst_z = std::max(worst_z, std::abs(m - e(i)) / se);
      ++compared;
    }
  }
  std::ostringstream os;
  os << " pg(1,0)_err=" << fmt("%.2g", at_zero) << " pg_closed_form_err=" << fmt("%.2g", pg_err)
     << " dirichlet_components=" << compared << " dirichlet_max_z=" << fmt("%.2f", worst_z);
  return {at_zero < 1e-12 && pg_err < 1e-12 && worst_z < 3.0, os.str()};
}

Outcome gp_oracle() {
  double worst_mean = 0.0, worst_diag = 0.0;
  for (std::uint64_t t = 0; t < 10; ++t) {
    std::mt19937_64 rng(900 + t);
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> cls(0, 2);
    std::uniform_real_distribution<double> u;
    const Eigen::Index n = 10 + 4 * static_cast<Eigen::Index>(t);
    Dataset d;
    d.num_classes = 3;
    d.features.resize(n, 3 + static_cast<Eigen::Index>(t % 4) * 4);
    for (Eigen::Index i = 0; i < d.features.size(); ++i) d.features.data()[i] = z(rng);
    d.lf_labels.resize(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int g = cls(rng);
      for (Eigen::Index j = 0; j < 4; ++j) d.lf_labels(i, j) = u(rng) < 0.3 ? kAbstain : (u(rng) < 0.75 ? g : cls(rng));
    }
    FableConfig cfg;
    cfg.seed = t;
    cfg.lanczos_rank = n;
    FableState s = fable_init(d, cfg);
    fable_sweep(s, d);
    const FableState before = s;
    fable_update_gp(s);

    const Eigen::MatrixXd sigma = before.kernel.to_dense();
    const Eigen::MatrixXd e_pi = before.phi.cwiseQuotient(before.xi);
    for (Eigen::Index r = 0; r < s.m_hat.cols(); ++r) {
      Eigen::VectorXd w(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double b = e_pi(i, r) + before.gamma(i, r), c = std::abs(before.c(i, r));
        w(i) = c < 1e-8 ? b / 4 : b / (2 * c) * std::tanh(c / 2);
      }
      // (Sigma^{-1} + W)^{-1} = (I + Sigma W)^{-1} Sigma
      const Eigen::MatrixXd post =
          (Eigen::MatrixXd::Identity(n, n) + sigma * w.asDiagonal()).partialPivLu().solve(sigma);
      const Eigen::VectorXd mean = 0.5 * post * (e_pi.col(r) - before.gamma.col(r));
      worst_mean = std::max(worst_mean, (s.m_hat.col(r) - mean).norm() / mean.norm());
      worst_diag = std::max(worst_diag, (s.sigma_diag.col(r) - post.diagonal()).norm() / post.diagonal().norm());
    }
  }
  return {worst_mean < 1e-6 && worst_diag < 1e-6,
          " instances=10 mean_rel_err=" + fmt("%.2g", worst_mean) + " diag_rel_err=" + fmt("%.2g", worst_diag)};
}

Outcome lanczos_speedup() {
  const Eigen::Index n = 2000;
  const Dataset d = generate_synthetic(SyntheticSpec::defaults(static_cast<std::size_t>(n), 6));
  const KernelMatrix k = cosine_kernel(d.features, 1e-4);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.05, 0.5);
  Eigen::VectorXd omega(n);
  for (Eigen::Index i = 0; i < n; ++i) omega(i) = u(rng);

  auto best_of = [](int reps, const std::function<void()>& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      f();
      best = std::min(best, seconds_since(t0));
    }
    return best;
  };
  Eigen::VectorXd fast_diag, dense_diag;
  const double fast = best_of(3, [&] { fast_diag = lowrank_posterior(k, omega, 100).diagonal(); });
  const double dense = best_of(1, [&] {
    const Eigen::MatrixXd sigma = k.to_dense();
    const Eigen::MatrixXd post =
        (Eigen::MatrixXd::Identity(n, n) + sigma * omega.asDiagonal()).partialPivLu().solve(sigma);
    dense_diag = post.diagonal();
  });
  const double rel = ((fast_diag - dense_diag).array().abs() / dense_diag.array()).maxCoeff();
  const double speedup = dense / fast;
  std::ostringstream os;
  os << " N=2000 rank=100 lanczos=" << fmt("%.4fs", fast) << " dense=" << fmt("%.3fs", dense)
     << " speedup=" << fmt("%.1fx", speedup) << " max_diag_rel_err=" << fmt("%.2g", rel);
  return {speedup >= 2.0 && rel < 1e-2, os.str()};
}

double dcor_brute(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const auto n = x.rows();
  auto centred = [n](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) = (m.row(i) - m.row(j)).norm();
    const Eigen::VectorXd rm = a.rowwise().mean();
    const Eigen::RowVectorXd cm = a.colwise().mean();
    const double g = a.mean();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) += g - rm(i) - cm(j);
    return a;
  };
  const Eigen::MatrixXd a = centred(x), b = centred(y);
  const double va = (a.array() * a.array()).mean(), vb = (b.array() * b.array()).mean();
  if (va <= 0 || vb <= 0) return 0.0;
  return std::sqrt(std::max((a.array() * b.array()).mean(), 0.0) / std::sqrt(va * vb));
}

Outcome dcor_oracle() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<int> un(5, 200), ud(1, 4);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = un(rng), p = ud(rng), q = ud(rng);
    Eigen::MatrixXd x(n, p), y(n, q);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = z(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = z(rng) + (t % 2 ? x(i % n, 0) * x(i % n, 0) : 0.0);
    if (t % 5 == 0) y = (x.col(0).array() > 0).cast<double>().matrix();  // binary indicator, as in the LF study
    worst = std::max(worst, std::abs(distance_correlation(x, y) - dcor_brute(x, y)));
  }
  return {worst <= 1e-12, " instances=20 max_abs_err=" + fmt("%.2g", worst)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FABLE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / "fable_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const char* name) { return (dir / name).string(); };
  std::vector<std::pair<std::string, bool>> checks;
  bool ok = run_cli("synth --size 1000 --seed 7 --out " + p("d1.json")) == 0 &&
            run_cli("synth --size 1000 --seed 7 --out " + p("d2.json")) == 0;
  checks.emplace_back("synth", ok && slurp(p("d1.json")) == slurp(p("d2.json")));
  ok = run_cli("aggregate --method fable --seed 7 --dataset " + p("d1.json") + " --out " + p("a1.json")) == 0 &&
       run_cli("aggregate --method fable --seed 7 --dataset " + p("d1.json") + " --out " + p("a2.json")) == 0;
  checks.emplace_back("aggregate", ok && slurp(p("a1.json")) == slurp(p("a2.json")));
  const std::string study = "study-corr --trials 5 --size 300 --seed 7 --out ";
  ok = run_cli(study + p("s1.csv")) == 0 && run_cli(study + p("s2.csv")) == 0;
  checks.emplace_back("study-corr", ok && slurp(p("s1.csv")) == slurp(p("s2.csv")));
  bool all = true;
  std::string detail;
  for (const auto& [name, good] : checks) {
    all = all && good;
    detail += " " + name + "=" + (good ? "identical" : "DIFFERENT");
  }
  return {all, detail};
}

// Returns false in `applicable` when no dataset is configured.
Outcome youtube(bool& applicable) {
  const char* path = std::getenv("FABLE_YOUTUBE_JSON");
  applicable = path != nullptr && *path != '\0';
  if (!applicable) return {true, " FABLE_YOUTUBE_JSON not set"};
  const Dataset d = load_json(path, 2);
  RunOptions opt;
  const double mv = score(run_method(Method::kMv, d, opt), d, MetricKind::kF1Binary) * 100;
  const double eb = score(run_method(Method::kEbcc, d, opt), d, MetricKind::kF1Binary) * 100;
  const double fb = score(run_method(Method::kFable, d, opt), d, MetricKind::kF1Binary) * 100;
  const bool ok = std::abs(mv - 80.74) <= 0.01 && fb > eb && std::abs(fb - 88.56) <= 3.0 && std::abs(eb - 86.57) <= 3.0;
  std::ostringstream os;
  os << " N=" << d.size() << " mv_f1=" << fmt("%.2f", mv) << " ebcc_f1=" << fmt("%.2f", eb)
     << " fable_f1=" << fmt("%.2f", fb);
  return {ok, os.str()};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string(" exception: ") + e.what()};
    }
    std::cout << "AC" << id << " " << (o.pass ? "PASS" : "FAIL") << " " << name << ":" << o.detail << std::endl;
    failures += o.pass ? 0 : 1;
  };

  report(1, "size robustness", size_robustness);
  report(2, "correlation study", correlation_study);
  report(3, "mixture ELBO monotone", elbo_monotone);
  report(4, "augmentation identities", augmentation_identities);
  report(5, "GP update vs dense inverse", gp_oracle);
  report(6, "Lanczos speedup", lanczos_speedup);
  report(7, "dCor vs brute force", dcor_oracle);
  report(8, "CLI determinism", cli_determinism);

  bool applicable = false;
  Outcome yt;
  try {
    yt = youtube(applicable);
  } catch (const std::exception& e) {
    applicable = true;
    yt = {false, std::string(" exception: ") + e.what()};
  }
  if (!applicable) {
    std::cout << "AC9 SKIP external dataset:" << yt.detail << std::endl;
  } else {
    std::cout << "AC9 " << (yt.pass ? "PASS" : "FAIL") << " external dataset:" << yt.detail << std::endl;
    failures += yt.pass ? 0 : 1;
  }

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
