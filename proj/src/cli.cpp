#include "kcrc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>

#include "kcrc/errors.hpp"

namespace kcrc::cli {

namespace {

std::vector<std::string> metric_names() {
  std::vector<std::string> out;
  for (const Metric m : all_metrics()) out.emplace_back(metric_name(m));
  return out;
}

// Flag values that need translating once parsing succeeded.
struct RawFlags {
  std::string method = "kcrc-lcd";
  std::vector<std::string> methods{"crc-gd", "kcrc-gd", "kcrc-lcd"};
  std::string kernel = "rbf";
  std::string kernel_metric = "euclidean";
  std::optional<double> beta;
  std::string psi = "identity";
  std::optional<Index> dim;
  Index graph_knn = 10;
  std::optional<double> graph_t;
  std::optional<double> mu;
  Index lcd_k = 50;
  std::optional<Index> lcd_coarse_k;
  std::vector<std::string> fine_metrics{"euclidean"};
  std::string coarse_metric = "euclidean";
  AlmConfig alm;
  std::string experiment = "same-direction";
};

void add_method_flags(CLI::App* app, RawFlags& raw, bool single_method) {
  if (single_method) {
    app->add_option("--method", raw.method, "Classifier")
        ->check(CLI::IsMember(method_names()))
        ->capture_default_str();
  }
  app->add_option("--kernel", raw.kernel, "Kernel")
      ->check(CLI::IsMember({"linear", "rbf", "dist-poly", "dist-exp"}))
      ->capture_default_str();
  app->add_option("--kernel-metric", raw.kernel_metric, "Metric of dist-poly / dist-exp")
      ->check(CLI::IsMember(metric_names()))
      ->capture_default_str();
  app->add_option("--beta", raw.beta, "Kernel width (default: median heuristic)")
      ->check(CLI::PositiveNumber);
  app->add_option("--psi", raw.psi, "Pseudo-transformation")
      ->check(CLI::IsMember({"identity", "kpca", "random", "graph"}))
      ->capture_default_str();
  app->add_option("--dim", raw.dim, "Kernel-space dimension c")->check(CLI::PositiveNumber);
  app->add_option("--graph-knn", raw.graph_knn, "Neighbours per atom for --psi graph")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--graph-t", raw.graph_t, "Heat kernel t for --psi graph (default: mean edge)")
      ->check(CLI::PositiveNumber);
  app->add_option("--mu", raw.mu, "Regularisation weight (default 1e-3)")
      ->check(CLI::PositiveNumber);
  app->add_option("--lcd-k", raw.lcd_k, "LCD size K")->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--lcd-coarse-k", raw.lcd_coarse_k, "Coarse LCD size (enables coarse-to-fine)")
      ->check(CLI::PositiveNumber);
  app->add_option("--fine-metrics", raw.fine_metrics, "Comma-separated fine metrics")
      ->delimiter(',')
      ->check(CLI::IsMember(metric_names()))
      ->capture_default_str();
  app->add_option("--coarse-metric", raw.coarse_metric, "Coarse metric")
      ->check(CLI::IsMember(metric_names()))
      ->capture_default_str();
  app->add_option("--sigma0", raw.alm.sigma0, "ALM initial penalty")->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--rho", raw.alm.rho, "ALM penalty growth (> 1)")
      ->check(CLI::Range(1.0 + 1e-12, 1e6))
      ->capture_default_str();
  app->add_option("--tau", raw.alm.tau, "ALM stopping threshold")->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--max-iter", raw.alm.max_iter, "ALM iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_common_flags(CLI::App* app, CliCommand& cmd) {
  app->add_option("--seed", cmd.seed, "Random seed")->capture_default_str();
  app->add_option("--threads", cmd.threads, "Worker threads for query evaluation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

MethodConfig build_method(const RawFlags& raw, Method method, std::uint64_t seed) {
  MethodConfig mc;
  mc.method = method;
  const auto kind = parse_kernel(raw.kernel);
  const MetricSpec kmetric{parse_metric(raw.kernel_metric)};
  switch (kind) {
    case KernelKind::linear: mc.kcrc.kernel = KernelSpec::linear(); break;
    case KernelKind::rbf: mc.kcrc.kernel = KernelSpec::rbf(raw.beta); break;
    case KernelKind::dist_polarization: mc.kcrc.kernel = KernelSpec::polarization(kmetric); break;
    case KernelKind::dist_exponential:
      mc.kcrc.kernel = KernelSpec::exponential(kmetric, raw.beta);
      break;
  }
  validate(mc.kcrc.kernel);
  mc.kcrc.psi = parse_psi(raw.psi);
  mc.kcrc.dim = raw.dim;
  mc.kcrc.graph.neighbors = KnnRule{raw.graph_knn};
  mc.kcrc.graph.weights = HeatWeight{raw.graph_t};
  mc.kcrc.seed = seed;
  mc.kcrc.alm = raw.alm;
  if (raw.mu) {
    mc.kcrc.mu = *raw.mu;
    mc.kcrc.alm.mu = *raw.mu;
    mc.crc_mu = *raw.mu;
  }
  mc.kcrc.alm.validate();
  mc.lcd.k = raw.lcd_k;
  mc.lcd.coarse_k = raw.lcd_coarse_k;
  mc.lcd.fine_metrics.clear();
  for (const auto& name : raw.fine_metrics) mc.lcd.fine_metrics.push_back({parse_metric(name)});
  mc.lcd.coarse_metric = {parse_metric(raw.coarse_metric)};
  if (mc.lcd.coarse_k && *mc.lcd.coarse_k < mc.lcd.k) {
    throw ArgumentError("--lcd-coarse-k must be at least --lcd-k");
  }
  return mc;
}

// Method settings for `m`; kcrc-lcd falls back to dist-exp when no kernel was chosen.
MethodConfig method_for(const CliCommand& cmd, Method m) {
  MethodConfig mc = cmd.method;
  mc.method = m;
  if (m == Method::kcrc_lcd && !cmd.kernel_given) {
    mc.kcrc.kernel = KernelSpec::exponential({}, cmd.method.kcrc.kernel.beta);
  }
  return mc;
}

std::filesystem::path confusion_path(const std::filesystem::path& out) {
  auto p = out;
  p.replace_filename(out.stem().string() + "_confusion.csv");
  return p;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write " + path.string());
  return f;
}

void emit_table(const CsvTable& table, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    write_table(out, table);
    return;
  }
  auto f = open_output(out_path);
  write_table(f, table);
  out << "wrote " << out_path << '\n';
}

int run_synth(const CliCommand& cmd, std::ostream& out) {
  SameDirectionSpec spec;
  spec.dim = cmd.m.value_or(2);
  spec.per_class = cmd.per_class.value_or(200);
  spec.noise_variance = cmd.noise_variance;
  spec.seed = cmd.seed;
  const Dictionary d = make_same_direction(spec);
  save_csv(d, cmd.out);
  out << "wrote " << d.size() << " samples of dimension " << d.dim() << " to " << cmd.out << '\n';
  return kExitOk;
}

int run_eval(const CliCommand& cmd, std::ostream& out) {
  const Dictionary train = load_dataset(cmd.train);
  const Dictionary test = load_dataset(cmd.test);
  if (train.dim() != test.dim()) {
    throw ArgumentError("train has dimension " + std::to_string(train.dim()) + " but test has " +
                        std::to_string(test.dim()));
  }
  MethodConfig mc = cmd.method;
  if (mc.method == Method::kcrc_lcd) mc.lcd.validate(train.size());
  EvalOptions opts;
  opts.threads = cmd.threads;
  opts.config = describe(mc);
  const EvalReport report = evaluate(make_classifier(train, mc), test, opts);

  const auto precision = out.precision(4);
  out << "method " << method_name(mc.method) << ": accuracy " << report.accuracy << " on "
      << report.n_queries << " queries (" << report.n_errors << " errors), median "
      << report.timing.median_ms << " ms per query\n";
  out.precision(precision);
  if (!cmd.out.empty()) {
    auto f = open_output(cmd.out);
    write_report(f, report);
    const auto cpath = confusion_path(cmd.out);
    auto c = open_output(cpath);
    write_confusion(c, report.confusion);
    out << "wrote " << cmd.out << " and " << cpath.string() << '\n';
  } else {
    write_confusion(out, report.confusion);
  }
  return kExitOk;
}

int run_sweep(const CliCommand& cmd, std::ostream& out) {
  const Dictionary d = load_dataset(cmd.train);
  std::optional<Dictionary> test;
  if (!cmd.test.empty()) {
    test = load_dataset(cmd.test);
    if (test->dim() != d.dim()) throw ArgumentError("train and test dimensions differ");
  }
  SweepConfig cfg;
  cfg.sizes = cmd.sizes;
  cfg.lcd_ks = cmd.lcd_ks;
  cfg.repeats = cmd.repeats;
  cfg.seed = cmd.seed;
  cfg.threads = cmd.threads;
  for (const Method m : cmd.methods) cfg.methods.push_back(method_for(cmd, m));
  const auto rows = run_dictionary_sweep(d, cfg, test ? &*test : nullptr);
  emit_table(to_table(rows), cmd.out, out);
  return kExitOk;
}

int run_bench(const CliCommand& cmd, std::ostream& out) {
  if (cmd.experiment == Experiment::same_direction) {
    SameDirectionConfig cfg;
    cfg.m_list = cmd.m_list;
    cfg.per_class = cmd.per_class.value_or(200);
    cfg.noise_variance = cmd.noise_variance;
    cfg.threads = cmd.threads;
    cfg.seeds.clear();
    for (Index r = 0; r < cmd.repeats; ++r) cfg.seeds.push_back(cmd.seed + static_cast<std::uint64_t>(r));
    for (const Method m : cmd.methods) {
      MethodConfig mc = cmd.method;
      mc.method = m;
      cfg.methods.push_back(mc);
    }
    emit_table(to_table(run_same_direction(cfg)), cmd.out, out);
    return kExitOk;
  }
  TimingConfig cfg;
  cfg.m = cmd.m.value_or(500);
  cfg.per_class = cmd.per_class.value_or(600);
  cfg.k = cmd.method.lcd.k;
  cfg.queries = cmd.queries;
  cfg.seed = cmd.seed;
  emit_table(to_table(run_timing(cfg)), cmd.out, out);
  return kExitOk;
}

}  // namespace

Dictionary load_dataset(const std::string& spec) {
  if (spec.starts_with("idx:")) {
    const auto rest = spec.substr(4);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) {
      throw ArgumentError("idx input must look like idx:IMAGES:LABELS, got '" + spec + "'");
    }
    return load_idx(rest.substr(0, colon), rest.substr(colon + 1));
  }
  return load_csv(spec);
}

ParseResult parse_args(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliCommand cmd;
  RawFlags raw;

  CLI::App app{"Kernel collaborative representation classification with locality constrained "
               "dictionaries"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Write a same-direction synthetic dataset as CSV");
  synth->add_option("--m", cmd.m, "Feature dimension (default 2)")->check(CLI::PositiveNumber);
  synth->add_option("--per-class", cmd.per_class, "Samples per class (default 200)")
      ->check(CLI::PositiveNumber);
  synth->add_option("--noise-var", cmd.noise_variance, "Noise variance")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth->add_option("--out", cmd.out, "Output CSV")->required();
  synth->add_option("--seed", cmd.seed, "Random seed")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Fit on --train, classify --test, report accuracy");
  eval->add_option("--train", cmd.train, "Training data (CSV or idx:IMAGES:LABELS)")->required();
  eval->add_option("--test", cmd.test, "Test data (CSV or idx:IMAGES:LABELS)")->required();
  eval->add_option("--out", cmd.out, "Report CSV; the confusion matrix goes next to it");
  add_method_flags(eval, raw, true);
  add_common_flags(eval, cmd);

  auto* sweep = app.add_subcommand("sweep", "Accuracy against dictionary size");
  sweep->add_option("--train", cmd.train, "Dataset to draw dictionaries from")->required();
  sweep->add_option("--test", cmd.test, "Fixed test set (default: atoms left out of each split)");
  sweep->add_option("--sizes", cmd.sizes, "Comma-separated atoms per class")
      ->delimiter(',')
      ->required()
      ->check(CLI::PositiveNumber);
  sweep->add_option("--methods", raw.methods, "Comma-separated methods")
      ->delimiter(',')
      ->check(CLI::IsMember(method_names()))
      ->capture_default_str();
  sweep->add_option("--lcd-ks", cmd.lcd_ks, "Comma-separated LCD sizes for kcrc-lcd")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  sweep->add_option("--repeats", cmd.repeats, "Random splits per size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep->add_option("--out", cmd.out, "Output CSV (default: stdout)");
  add_method_flags(sweep, raw, false);
  add_common_flags(sweep, cmd);

  auto* bench = app.add_subcommand("bench", "Synthetic experiments: same-direction or timing");
  bench->add_option("--experiment", raw.experiment, "Experiment")
      ->check(CLI::IsMember({"same-direction", "timing"}))
      ->capture_default_str();
  bench->add_option("--m-list", cmd.m_list, "Comma-separated dimensions (same-direction)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--m", cmd.m, "Dimension (timing, default 500)")->check(CLI::PositiveNumber);
  bench->add_option("--per-class", cmd.per_class,
                    "Training atoms per class (default 200 same-direction, 600 timing)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--noise-var", cmd.noise_variance, "Noise variance")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  bench->add_option("--queries", cmd.queries, "Timed queries (timing)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--methods", raw.methods, "Comma-separated methods (same-direction)")
      ->delimiter(',')
      ->check(CLI::IsMember(method_names()))
      ->capture_default_str();
  bench->add_option("--repeats", cmd.repeats, "Seeds per configuration (same-direction)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--out", cmd.out, "Output CSV (default: stdout)");
  add_method_flags(bench, raw, false);
  add_common_flags(bench, cmd);

  app.add_subcommand("metrics", "List the distance metric names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return ParseResult{std::nullopt, code == 0 ? kExitOk : kExitDataError};
  }

  try {
    if (synth->parsed()) {
      cmd.subcommand = Subcommand::synth;
    } else if (eval->parsed()) {
      cmd.subcommand = Subcommand::eval;
      cmd.kernel_given = eval->count("--kernel") > 0;
      cmd.method = build_method(raw, Method::crc_gd, cmd.seed);
      cmd.method = method_for(cmd, parse_method(raw.method));
    } else if (sweep->parsed() || bench->parsed()) {
      cmd.subcommand = sweep->parsed() ? Subcommand::sweep : Subcommand::bench;
      cmd.kernel_given = (sweep->parsed() ? sweep : bench)->count("--kernel") > 0;
      cmd.methods.clear();
      for (const auto& name : raw.methods) cmd.methods.push_back(parse_method(name));
      cmd.method = build_method(raw, Method::kcrc_lcd, cmd.seed);
      if (bench->parsed()) {
        cmd.experiment = raw.experiment == "timing" ? Experiment::timing : Experiment::same_direction;
        const bool k_given = bench->count("--lcd-k") > 0;
        if (cmd.experiment == Experiment::timing && !k_given) cmd.method.lcd.k = 200;
        if (cmd.experiment == Experiment::same_direction && !k_given) cmd.method.lcd.k = 20;
        if (bench->count("--repeats") == 0) cmd.repeats = 1;
      }
    } else {
      cmd.subcommand = Subcommand::metrics;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return ParseResult{std::nullopt, kExitDataError};
  }
  return ParseResult{std::move(cmd), kExitOk};
}

int run(const CliCommand& cmd, std::ostream& out, std::ostream& err) {
  try {
    switch (cmd.subcommand) {
      case Subcommand::synth: return run_synth(cmd, out);
      case Subcommand::eval: return run_eval(cmd, out);
      case Subcommand::sweep: return run_sweep(cmd, out);
      case Subcommand::bench: return run_bench(cmd, out);
      case Subcommand::metrics:
        for (const auto& name : metric_names()) out << name << '\n';
        return kExitOk;
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitDataError;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const auto parsed = parse_args(argc, argv, out, err);
  if (!parsed.command) return parsed.exit_code;
  return run(*parsed.command, out, err);
}

}  // namespace kcrc::cli
