#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fable/baselines.hpp"
#include "fable/dataset.hpp"
#include "fable/ebcc.hpp"
#include "fable/error.hpp"
#include "fable/fable_model.hpp"
#include "fable/metrics.hpp"
#include "fable/synthetic.hpp"

namespace fable {

enum class Method { kMv, kDs, kIbcc, kEbcc, kFable };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::kMv: return "mv";
    case Method::kDs: return "ds";
    case Method::kIbcc: return "ibcc";
    case Method::kEbcc: return "ebcc";
    case Method::kFable: return "fable";
  }
  return "?";
}

inline std::optional<Method> parse_method(const std::string& name) {
  for (Method m : {Method::kMv, Method::kDs, Method::kIbcc, Method::kEbcc, Method::kFable}) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

/// Knobs shared by every method; each method reads the ones it has.
struct RunOptions {
  std::uint64_t seed = 0;
  std::size_t max_iters = 500;
  double tol = 1e-6;
  int subtypes = 3;
  Eigen::Index lanczos_rank = 100;
};

inline Posterior run_method(Method method, const Dataset& d, const RunOptions& opt) {
  switch (method) {
    case Method::kMv: return majority_vote(d);
    case Method::kDs: {
      DawidSkeneOptions o;
      o.max_iters = opt.max_iters;
      o.tol = opt.tol;
      return dawid_skene(d, o);
    }
    case Method::kIbcc:
    case Method::kEbcc: {
      EbccOptions o;
      o.subtypes = opt.subtypes;
      o.seed = opt.seed;
      o.max_iters = opt.max_iters;
      o.tol = opt.tol;
      return method == Method::kIbcc ? ibcc_fit(d, o) : ebcc_fit(d, o);
    }
    case Method::kFable: {
      FableConfig c;
      c.subtypes = opt.subtypes;
      c.seed = opt.seed;
      c.max_iters = opt.max_iters;
      c.tol = opt.tol;
      c.lanczos_rank = std::min<Eigen::Index>(opt.lanczos_rank, static_cast<Eigen::Index>(d.size()));
      return fable_fit(d, c);
    }
  }
  throw std::invalid_argument("run_method: unknown method");
}

/// Metric of a fit against the dataset's gold labels.
inline double score(const Posterior& p, const Dataset& d, MetricKind metric, int positive_class = 1) {
  if (!d.gold) throw DataError("score: dataset has no gold labels");
  return evaluate(metric, p.predictions, *d.gold, positive_class).value;
}

/// Worker count from FABLE_THREADS; 1 when unset or unparsable.
inline unsigned thread_count() {
  const char* env = std::getenv("FABLE_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || v < 1) return 1;
  return static_cast<unsigned>(std::min<long>(v, 256));
}

/// Runs job(0..count-1) on up to `threads` workers. Each job writes only its
/// own slot, so the result does not depend on scheduling. The first exception
/// (lowest index) is rethrown after all workers finish.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const auto n = std::min<std::size_t>(threads, count);
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

enum class Layout { kStaggered, kCorners };

inline SyntheticSpec layout_spec(Layout layout, std::size_t size, std::uint64_t seed) {
  return layout == Layout::kCorners ? SyntheticSpec::corners(size, seed) : SyntheticSpec::defaults(size, seed);
}

// ---------------------------------------------------------------------------
// feature / LF correlation study

struct CorrStudyOptions {
  std::size_t trials = 50;
  std::size_t size = 1000;
  double psi_lo = 1.0;
  double psi_hi = 3.0;
  std::uint64_t seed = 0;
  bool shared_data = false;  ///< every trial reuses the trial-0 dataset
  Layout layout = Layout::kStaggered;
  std::optional<MetricKind> metric;
  RunOptions run;
};

struct CorrTrial {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double corr_x_lfs = 0.0;
  double ebcc_metric = 0.0;
  double fable_metric = 0.0;
  double delta_metric() const { return fable_metric - ebcc_metric; }
};

struct CorrStudyResult {
  MetricKind metric = MetricKind::kAccuracy;
  std::vector<CorrTrial> trials;
  std::optional<PearsonResult> pearson;
  std::string pearson_error;  ///< why `pearson` is empty
};

inline constexpr std::uint64_t kPsiStream = 0x2545f4914f6cdd1dULL;

/// Dataset of one study trial: psi ~ Uniform(lo, hi) per LF.
inline Dataset corr_trial_dataset(const CorrStudyOptions& opt, std::uint64_t data_seed) {
  SyntheticSpec spec = layout_spec(opt.layout, opt.size, data_seed);
  spec.sample_psi(opt.psi_lo, opt.psi_hi, data_seed ^ kPsiStream);
  return generate_synthetic(spec);
}

/// Trial t uses seed master ^ t for its data and both fits.
inline CorrStudyResult study_corr(const CorrStudyOptions& opt) {
  if (opt.trials < 1) throw std::invalid_argument("study_corr: need at least one trial");
  CorrStudyResult out;
  out.trials.resize(opt.trials);
  std::vector<int> kinds(opt.trials);
  parallel_for(opt.trials, thread_count(), [&](std::size_t t) {
    const std::uint64_t seed = opt.seed ^ static_cast<std::uint64_t>(t);
    const Dataset d = corr_trial_dataset(opt, opt.shared_data ? opt.seed : seed);
    const MetricKind metric = opt.metric.value_or(default_metric(d.num_classes));
    RunOptions run = opt.run;
    run.seed = seed;
    CorrTrial& row = out.trials[t];
    row.trial = t;
    row.seed = seed;
    row.corr_x_lfs = feature_lf_correlation(d);
    row.ebcc_metric = score(run_method(Method::kEbcc, d, run), d, metric);
    row.fable_metric = score(run_method(Method::kFable, d, run), d, metric);
    kinds[t] = static_cast<int>(metric);
  });
  out.metric = static_cast<MetricKind>(kinds.front());

  std::vector<double> xs, ys;
  for (const auto& row : out.trials) {
    xs.push_back(row.corr_x_lfs);
    ys.push_back(row.delta_metric());
  }
  try {
    out.pearson = pearson_r(xs, ys);
  } catch (const NumericalError& e) {
    out.pearson_error = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// dataset-size benchmark

struct BenchOptions {
  std::vector<std::size_t> sizes{1000, 5000, 10000, 15000, 20000};
  std::size_t runs = 10;
  std::vector<Method> methods{Method::kMv, Method::kIbcc, Method::kEbcc, Method::kFable};
  std::uint64_t seed = 0;
  Layout layout = Layout::kStaggered;
  std::optional<MetricKind> metric;
  RunOptions run;
};

struct BenchRow {
  Method method = Method::kMv;
  std::size_t size = 0;
  std::size_t runs = 0;
  double mean = 0.0;
  double std = 0.0;  ///< population standard deviation over runs
  std::vector<double> values;
};

/// Run r at every size uses seed master ^ r for the data and the fits.
inline std::vector<BenchRow> bench_size(const BenchOptions& opt) {
  if (opt.runs < 1) throw std::invalid_argument("bench_size: need at least one run");
  std::vector<BenchRow> rows;
  for (std::size_t size : opt.sizes) {
    std::vector<std::vector<double>> values(opt.methods.size(), std::vector<double>(opt.runs));
    parallel_for(opt.runs, thread_count(), [&](std::size_t r) {
      const std::uint64_t seed = opt.seed ^ static_cast<std::uint64_t>(r);
      const Dataset d = generate_synthetic(layout_spec(opt.layout, size, seed));
      const MetricKind metric = opt.metric.value_or(default_metric(d.num_classes));
      RunOptions run = opt.run;
      run.seed = seed;
      for (std::size_t m = 0; m < opt.methods.size(); ++m) {
        values[m][r] = score(run_method(opt.methods[m], d, run), d, metric);
      }
    });
    for (std::size_t m = 0; m < opt.methods.size(); ++m) {
      BenchRow row;
      row.method = opt.methods[m];
      row.size = size;
      row.runs = opt.runs;
      row.values = values[m];
      double sum = 0.0;
      for (double v : row.values) sum += v;
      row.mean = sum / static_cast<double>(opt.runs);
      double var = 0.0;
      for (double v : row.values) var += (v - row.mean) * (v - row.mean);
      row.std = std::sqrt(var / static_cast<double>(opt.runs));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace fable
