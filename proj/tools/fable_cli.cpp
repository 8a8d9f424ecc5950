// fable_cli: label aggregation, synthetic data and the experiment drivers.
//
//   fable_cli aggregate  --method fable --dataset train.json --out preds.json
//   fable_cli synth      --size 1000 --seed 1 --psi-uniform 1 3 --out data.json
//   fable_cli study-corr --trials 50 --out study.csv
//   fable_cli bench-size --sizes 1000,5000,10000 --runs 10 --out bench.csv
//
// Exit codes: 0 ok, 2 usage, 3 data, 4 numerical.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fable/fable.hpp"

namespace {

using fable::Method;
using fable::MetricKind;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = 0;
  std::size_t max_iters = 500;
  double tol = 1e-6;
  int subtypes = 3;
  Eigen::Index lanczos_rank = 100;
  std::string metric;  // empty: by class count
  int positive_class = 1;

  fable::RunOptions run() const {
    fable::RunOptions r;
    r.seed = seed;
    r.max_iters = max_iters;
    r.tol = tol;
    r.subtypes = subtypes;
    r.lanczos_rank = lanczos_rank;
    return r;
  }

  std::optional<MetricKind> metric_kind() const {
    if (metric.empty()) return std::nullopt;
    return metric == "accuracy" ? MetricKind::kAccuracy : MetricKind::kF1Binary;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "master RNG seed");
  cmd->add_option("--max-iters", c.max_iters, "sweep budget per fit")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", c.tol, "stop when max |change in q(z)| < tol")->check(CLI::PositiveNumber);
  cmd->add_option("--subtypes", c.subtypes, "subtypes per class (M)")->check(CLI::PositiveNumber);
  cmd->add_option("--lanczos-rank", c.lanczos_rank, "Lanczos steps for the GP posterior")->check(CLI::PositiveNumber);
  cmd->add_option("--metric", c.metric, "accuracy or f1 (default: f1 for 2 classes)")
      ->check(CLI::IsMember({"accuracy", "f1"}));
  cmd->add_option("--positive-class", c.positive_class, "positive class for f1");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fable::DataError("cannot write " + path);
  return out;
}

Method method_or_throw(const std::string& name) {
  const auto m = fable::parse_method(name);
  if (!m) throw UsageError("unknown method: " + name);
  return *m;
}

// ---------------------------------------------------------------------------

struct AggregateArgs {
  std::string method = "fable";
  std::string dataset;
  std::string features, labels, gold;
  int num_classes = 0;
  std::string out;
  std::string record;
};

fable::Dataset load_input(const AggregateArgs& a) {
  if (!a.dataset.empty()) {
    if (!a.features.empty() || !a.labels.empty()) throw UsageError("give either --dataset or --features/--labels");
    return fable::load_json(a.dataset, a.num_classes);
  }
  if (a.features.empty() || a.labels.empty()) throw UsageError("need --dataset, or --features and --labels");
  std::optional<std::filesystem::path> gold;
  if (!a.gold.empty()) gold = a.gold;
  return fable::load_csv(a.features, a.labels, gold, a.num_classes);
}

int cmd_aggregate(const AggregateArgs& a, const Common& c) {
  const Method method = method_or_throw(a.method);
  const fable::Dataset d = load_input(a);
  const auto t0 = std::chrono::steady_clock::now();
  const fable::Posterior p = fable::run_method(method, d, c.run());
  const double wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json preds = nlohmann::json::object();
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::vector<double> probs(p.probs.cols());
    for (Eigen::Index k = 0; k < p.probs.cols(); ++k) probs[k] = p.probs(static_cast<Eigen::Index>(i), k);
    preds[fable::item_id(d, i)] = {{"prediction", p.predictions[i]}, {"probs", probs}};
  }
  open_out(a.out) << preds.dump(2) << "\n";

  nlohmann::json record = {{"method", fable::method_name(method)},
                           {"dataset", d.name},
                           {"n_items", d.size()},
                           {"n_lfs", d.num_lfs()},
                           {"n_classes", d.num_classes},
                           {"seed", c.seed},
                           {"n_iters", p.n_iters},
                           {"converged", p.converged},
                           {"wall_time_ms", wall_ms},
                           {"config",
                            {{"max_iters", c.max_iters},
                             {"tol", c.tol},
                             {"subtypes", c.subtypes},
                             {"lanczos_rank", c.lanczos_rank}}}};
  std::cout << "method=" << fable::method_name(method) << " items=" << d.size() << " iters=" << p.n_iters
            << " converged=" << (p.converged ? "yes" : "no");
  if (d.gold) {
    const MetricKind metric = c.metric_kind().value_or(fable::default_metric(d.num_classes));
    const double value = fable::score(p, d, metric, c.positive_class);
    record["metric_name"] = fable::metric_name(metric);
    record["metric_value"] = value;
    std::cout << " " << fable::metric_name(metric) << "=" << fmt(value);
  }
  std::cout << "\n";
  if (!a.record.empty()) open_out(a.record) << record.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::size_t size = 1000;
  std::vector<double> psi;
  std::vector<double> psi_uniform;
  std::string layout = "staggered";
  std::string out;
};

fable::Layout parse_layout(const std::string& s) {
  return s == "corners" ? fable::Layout::kCorners : fable::Layout::kStaggered;
}

int cmd_synth(const SynthArgs& a, const Common& c) {
  fable::SyntheticSpec spec = fable::layout_spec(parse_layout(a.layout), a.size, c.seed);
  if (!a.psi.empty() && !a.psi_uniform.empty()) throw UsageError("--psi and --psi-uniform are exclusive");
  if (!a.psi_uniform.empty()) {
    spec.sample_psi(a.psi_uniform[0], a.psi_uniform[1], c.seed ^ fable::kPsiStream);
  } else if (a.psi.size() == 1) {
    spec.psi.assign(spec.num_lfs(), a.psi[0]);
  } else if (!a.psi.empty()) {
    spec.psi = a.psi;
  }
  const fable::Dataset d = fable::generate_synthetic(spec);
  fable::save_json(d, a.out);
  std::cout << "items=" << d.size() << " lfs=" << d.num_lfs() << " classes=" << d.num_classes << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct StudyArgs {
  std::size_t trials = 50;
  std::size_t size = 1000;
  std::vector<double> psi_uniform{1.0, 3.0};
  bool shared_data = false;
  std::string layout = "staggered";
  std::string out;
  std::string summary;
};

int cmd_study_corr(const StudyArgs& a, const Common& c) {
  fable::CorrStudyOptions opt;
  opt.trials = a.trials;
  opt.size = a.size;
  opt.psi_lo = a.psi_uniform[0];
  opt.psi_hi = a.psi_uniform[1];
  opt.seed = c.seed;
  opt.shared_data = a.shared_data;
  opt.layout = parse_layout(a.layout);
  opt.metric = c.metric_kind();
  opt.run = c.run();
  const fable::CorrStudyResult res = fable::study_corr(opt);

  auto out = open_out(a.out);
  out << "trial,seed,corr_x_lfs,ebcc_metric,fable_metric,delta_metric\n";
  for (const auto& t : res.trials) {
    out << t.trial << "," << t.seed << "," << fmt(t.corr_x_lfs) << "," << fmt(t.ebcc_metric) << ","
        << fmt(t.fable_metric) << "," << fmt(t.delta_metric()) << "\n";
  }

  nlohmann::json summary = {{"trials", res.trials.size()}, {"metric", fable::metric_name(res.metric)}};
  if (res.pearson) {
    summary["pearson_r"] = res.pearson->r;
    summary["p_value"] = res.pearson->p;
    std::cout << "pearson_r=" << fmt(res.pearson->r) << " p=" << fmt(res.pearson->p) << "\n";
  } else {
    summary["error"] = res.pearson_error;
    std::cerr << "correlation undefined: " << res.pearson_error << "\n";
  }
  if (!a.summary.empty()) open_out(a.summary) << summary.dump(2) << "\n";
  return res.pearson ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::size_t> sizes{1000, 5000, 10000, 15000, 20000};
  std::size_t runs = 10;
  std::vector<std::string> methods{"mv", "ibcc", "ebcc", "fable"};
  std::string layout = "staggered";
  std::string out;
};

int cmd_bench_size(const BenchArgs& a, const Common& c) {
  fable::BenchOptions opt;
  opt.sizes = a.sizes;
  opt.runs = a.runs;
  opt.methods.clear();
  for (const auto& m : a.methods) opt.methods.push_back(method_or_throw(m));
  opt.seed = c.seed;
  opt.layout = parse_layout(a.layout);
  opt.metric = c.metric_kind();
  opt.run = c.run();
  const auto rows = fable::bench_size(opt);

  auto out = open_out(a.out);
  const std::string metric = fable::metric_name(opt.metric.value_or(MetricKind::kAccuracy));
  out << "method,size,runs,mean_" << metric << ",std_" << metric << "\n";
  for (const auto& r : rows) {
    out << fable::method_name(r.method) << "," << r.size << "," << r.runs << "," << fmt(r.mean) << "," << fmt(r.std)
        << "\n";
    std::cout << fable::method_name(r.method) << " N=" << r.size << " mean=" << fmt(r.mean) << " std=" << fmt(r.std)
              << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-aware label aggregation for weak supervision"};
  app.require_subcommand(1);
  Common common;

  AggregateArgs agg;
  auto* aggregate = app.add_subcommand("aggregate", "infer labels for a dataset");
  aggregate->add_option("--method", agg.method, "mv, ds, ibcc, ebcc or fable")
      ->check(CLI::IsMember({"mv", "ds", "ibcc", "ebcc", "fable"}));
  aggregate->add_option("--dataset", agg.dataset, "dataset JSON");
  aggregate->add_option("--features", agg.features, "features CSV (with --labels)");
  aggregate->add_option("--labels", agg.labels, "LF label CSV, -1 for abstain");
  aggregate->add_option("--gold", agg.gold, "optional gold label CSV");
  aggregate->add_option("--num-classes", agg.num_classes, "class count (default: inferred)");
  aggregate->add_option("--out", agg.out, "predictions JSON")->required();
  aggregate->add_option("--record", agg.record, "run record JSON (timings, metric)");
  add_common(aggregate, common);

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  synth->add_option("--size", syn.size, "number of items")->check(CLI::PositiveNumber);
  auto* psi_fixed = synth->add_option("--psi", syn.psi, "LF width multiplier (one value or one per LF)");
  synth->add_option("--psi-uniform", syn.psi_uniform, "draw each psi from Uniform(lo, hi)")
      ->expected(2)
      ->excludes(psi_fixed);
  synth->add_option("--layout", syn.layout, "staggered or corners")->check(CLI::IsMember({"staggered", "corners"}));
  synth->add_option("--out", syn.out, "dataset JSON")->required();
  add_common(synth, common);

  StudyArgs study;
  auto* corr = app.add_subcommand("study-corr", "feature/LF correlation vs FABLE-over-EBCC gain");
  corr->add_option("--trials", study.trials, "number of synthetic datasets (>= 3)")->check(CLI::Range(3, 100000));
  corr->add_option("--size", study.size, "items per dataset")->check(CLI::PositiveNumber);
  corr->add_option("--psi-uniform", study.psi_uniform, "psi range")->expected(2);
  corr->add_flag("--shared-data", study.shared_data, "reuse one dataset for every trial");
  corr->add_option("--layout", study.layout, "staggered or corners")->check(CLI::IsMember({"staggered", "corners"}));
  corr->add_option("--out", study.out, "per-trial CSV")->required();
  corr->add_option("--summary", study.summary, "Pearson summary JSON");
  add_common(corr, common);

  BenchArgs bench;
  auto* bsize = app.add_subcommand("bench-size", "accuracy vs dataset size");
  bsize->add_option("--sizes", bench.sizes, "comma-separated sizes")->delimiter(',');
  bsize->add_option("--runs", bench.runs, "runs per size")->check(CLI::PositiveNumber);
  bsize->add_option("--methods", bench.methods, "comma-separated methods")
      ->delimiter(',')
      ->check(CLI::IsMember({"mv", "ds", "ibcc", "ebcc", "fable"}));
  bsize->add_option("--layout", bench.layout, "staggered or corners")->check(CLI::IsMember({"staggered", "corners"}));
  bsize->add_option("--out", bench.out, "CSV")->required();
  add_common(bsize, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*aggregate) return cmd_aggregate(agg, common);
    if (*synth) return cmd_synth(syn, common);
    if (*corr) return cmd_study_corr(study, common);
    if (*bsize) return cmd_bench_size(bench, common);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const fable::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fable::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
