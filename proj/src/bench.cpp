#include "kcrc/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "kcrc/errors.hpp"

namespace kcrc {

Index ConfusionMatrix::total() const {
  Index sum = 0;
  for (const auto& row : counts) sum = std::accumulate(row.begin(), row.end(), sum);
  return sum;
}

Index ConfusionMatrix::trace() const {
  Index sum = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) sum += counts[i][i];
  return sum;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

namespace {

struct QueryOutcome {
  std::optional<Label> label;
  bool early_exit = false;
  double ms = 0.0;
  std::exception_ptr error;
};

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

[[noreturn]] void rethrow_as_abort(std::exception_ptr first, Index failed, Index total) {
  const std::string prefix = std::to_string(failed) + " of " + std::to_string(total) +
                             " queries failed; first failure: ";
  try {
    std::rethrow_exception(first);
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

double parse_double_field(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("bad number '" + std::string(s) + "' for " + std::string(what));
  }
  return v;
}

Index parse_index_field(std::string_view s, std::string_view what) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("bad integer '" + std::string(s) + "' for " + std::string(what));
  }
  return static_cast<Index>(v);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

EvalReport evaluate(const Classifier& classify, const Dictionary& test, const EvalOptions& opts) {
  if (test.empty()) throw ArgumentError("test set is empty");
  const Index n = test.size();
  std::vector<QueryOutcome> outcomes(static_cast<std::size_t>(n));

  auto run_one = [&](Index q) {
    auto& o = outcomes[static_cast<std::size_t>(q)];
    const Eigen::VectorXd y = test.atom(q);
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto result = classify(y);
      o.label = result.label;
      o.early_exit = result.early_exit;
    } catch (...) {
      o.error = std::current_exception();
    }
    o.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
               .count();
  };

  const auto workers = static_cast<Index>(std::max(1u, opts.threads));
  if (workers == 1 || n == 1) {
    for (Index q = 0; q < n; ++q) run_one(q);
  } else {
    std::atomic<Index> next{0};
    std::vector<std::jthread> pool;
    for (Index w = 0; w < std::min(workers, n); ++w) {
      pool.emplace_back([&] {
        for (Index q = next++; q < n; q = next++) run_one(q);
      });
    }
  }

  EvalReport report;
  report.config = opts.config;
  std::set<Label> classes(test.classes().begin(), test.classes().end());
  std::exception_ptr first_error;
  std::vector<double> times;
  for (const auto& o : outcomes) {
    if (o.error) {
      ++report.n_errors;
      if (!first_error) first_error = o.error;
      continue;
    }
    classes.insert(*o.label);
    times.push_back(o.ms);
    if (o.early_exit) ++report.n_early_exit;
  }
  if (static_cast<double>(report.n_errors) > kMaxErrorFraction * static_cast<double>(n)) {
    rethrow_as_abort(first_error, report.n_errors, n);
  }

  auto& cm = report.confusion;
  cm.classes.assign(classes.begin(), classes.end());
  const auto pos = [&](Label l) {
    return static_cast<std::size_t>(std::lower_bound(cm.classes.begin(), cm.classes.end(), l) -
                                    cm.classes.begin());
  };
  cm.counts.assign(cm.classes.size(), std::vector<Index>(cm.classes.size(), 0));
  for (Index q = 0; q < n; ++q) {
    const auto& o = outcomes[static_cast<std::size_t>(q)];
    if (o.label) ++cm.counts[pos(test.label(q))][pos(*o.label)];
  }
  report.n_queries = cm.total();
  report.accuracy = report.n_queries > 0 ? static_cast<double>(cm.trace()) /
                                               static_cast<double>(report.n_queries)
                                         : 0.0;
  report.timing.count = static_cast<Index>(times.size());
  report.timing.median_ms = median_of(times);
  report.timing.mean_ms =
      times.empty() ? 0.0
                    : std::accumulate(times.begin(), times.end(), 0.0) /
                          static_cast<double>(times.size());
  return report;
}

void write_report(std::ostream& out, const EvalReport& r) {
  out << "key,value\n";
  out << "accuracy," << format_double(r.accuracy) << '\n';
  out << "n_queries," << r.n_queries << '\n';
  out << "n_errors," << r.n_errors << '\n';
  out << "n_early_exit," << r.n_early_exit << '\n';
  out << "timing_median_ms," << format_double(r.timing.median_ms) << '\n';
  out << "timing_mean_ms," << format_double(r.timing.mean_ms) << '\n';
  out << "timing_count," << r.timing.count << '\n';
  for (const auto& [k, v] : r.config) {
    if (k.find_first_of(",\n") != std::string::npos || v.find_first_of(",\n") != std::string::npos) {
      throw ArgumentError("config entry '" + k + "' cannot contain commas or newlines");
    }
    out << "config." << k << ',' << v << '\n';
  }
}

void write_confusion(std::ostream& out, const ConfusionMatrix& c) {
  out << "true\\pred";
  for (const Label l : c.classes) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < c.classes.size(); ++i) {
    out << c.classes[i];
    for (const Index v : c.counts[i]) out << ',' << v;
    out << '\n';
  }
}

ConfusionMatrix parse_confusion(std::istream& in) {
  std::string line;
  if (!read_line(in, line)) throw ParseError("confusion matrix is empty");
  const auto header = split_line(line);
  if (header.empty() || header.front() != "true\\pred") {
    throw ParseError("confusion matrix header must start with 'true\\pred'");
  }
  ConfusionMatrix c;
  for (std::size_t j = 1; j < header.size(); ++j) {
    c.classes.push_back(static_cast<Label>(parse_index_field(header[j], "class label")));
  }
  while (read_line(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) throw ParseError("confusion row has the wrong width");
    const auto i = c.counts.size();
    if (i >= c.classes.size() ||
        parse_index_field(cells[0], "class label") != c.classes[i]) {
      throw ParseError("confusion rows must follow the header's class order");
    }
    std::vector<Index> row;
    for (std::size_t j = 1; j < cells.size(); ++j) row.push_back(parse_index_field(cells[j], "count"));
    c.counts.push_back(std::move(row));
  }
  if (c.counts.size() != c.classes.size()) throw ParseError("confusion matrix is not square");
  return c;
}

EvalReport parse_report(std::istream& report, std::istream& confusion) {
  EvalReport r;
  std::string line;
  if (!read_line(report, line) || line != "key,value") {
    throw ParseError("report must start with the header 'key,value'");
  }
  while (read_line(report, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("report line without a comma: " + line);
    const std::string key = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    if (key == "accuracy") r.accuracy = parse_double_field(value, key);
    else if (key == "n_queries") r.n_queries = parse_index_field(value, key);
    else if (key == "n_errors") r.n_errors = parse_index_field(value, key);
    else if (key == "n_early_exit") r.n_early_exit = parse_index_field(value, key);
    else if (key == "timing_median_ms") r.timing.median_ms = parse_double_field(value, key);
    else if (key == "timing_mean_ms") r.timing.mean_ms = parse_double_field(value, key);
    else if (key == "timing_count") r.timing.count = parse_index_field(value, key);
    else if (key.starts_with("config.")) r.config[key.substr(7)] = value;
    else throw ParseError("unknown report key '" + key + "'");
  }
  r.confusion = parse_confusion(confusion);
  return r;
}

void write_table(std::ostream& out, const CsvTable& t) {
  const auto write_row = [&](const std::vector<std::string>& row) {
    if (row.size() != t.header.size()) throw ArgumentError("table row width differs from header");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j].find_first_of(",\n") != std::string::npos) {
        throw ArgumentError("table cell '" + row[j] + "' cannot contain commas or newlines");
      }
      out << (j ? "," : "") << row[j];
    }
    out << '\n';
  };
  write_row(t.header);
  for (const auto& row : t.rows) write_row(row);
}

CsvTable parse_table(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!read_line(in, line)) throw ParseError("table is empty");
  t.header = split_line(line);
  while (read_line(in, line)) {
    if (line.empty()) continue;
    auto row = split_line(line);
    if (row.size() != t.header.size()) throw ParseError("table row width differs from header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::crc_gd: return "crc-gd";
    case Method::kcrc_gd: return "kcrc-gd";
    case Method::kcrc_lcd: return "kcrc-lcd";
    case Method::kcrc_robust: return "kcrc-robust";
  }
  return "unknown";
}

std::vector<std::string> method_names() {
  return {"crc-gd", "kcrc-gd", "kcrc-lcd", "kcrc-robust"};
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::crc_gd, Method::kcrc_gd, Method::kcrc_lcd, Method::kcrc_robust}) {
    if (method_name(m) == name) return m;
  }
  throw ArgumentError("unknown method '" + std::string(name) +
                      "' (expected crc-gd, kcrc-gd, kcrc-lcd, kcrc-robust)");
}

namespace {

EvalOptions threads_only(unsigned threads) {
  EvalOptions opts;
  opts.threads = threads;
  return opts;
}

struct LcdHolder {
  LcdHolder(Dictionary d, const MethodConfig& cfg)
      : dict(std::move(d)), classifier(dict, cfg.lcd, cfg.kcrc, cfg.distance_cache) {}
  Dictionary dict;
  LcdClassifier classifier;
};

}  // namespace

Classifier make_classifier(const Dictionary& train, const MethodConfig& cfg) {
  switch (cfg.method) {
    case Method::crc_gd: {
      auto model = std::make_shared<const CrcModel>(crc_fit(train, cfg.crc_mu, cfg.kcrc.seed));
      return [model](const Eigen::VectorXd& y) { return crc_classify(*model, y); };
    }
    case Method::kcrc_gd:
    case Method::kcrc_robust: {
      KcrcConfig kcfg = cfg.kcrc;
      kcfg.variant = cfg.method == Method::kcrc_gd ? Variant::rls : Variant::robust;
      auto model = std::make_shared<const KcrcModel>(kcrc_fit(train, kcfg));
      return [model](const Eigen::VectorXd& y) { return kcrc_classify(*model, y); };
    }
    case Method::kcrc_lcd: {
      auto holder = std::make_shared<const LcdHolder>(train, cfg);
      return [holder](const Eigen::VectorXd& y) { return holder->classifier.classify(y); };
    }
  }
  throw ArgumentError("unknown method");
}

std::map<std::string, std::string> describe(const MethodConfig& cfg) {
  std::map<std::string, std::string> out;
  out["method"] = std::string(method_name(cfg.method));
  out["seed"] = std::to_string(cfg.kcrc.seed);
  if (cfg.method == Method::crc_gd) {
    out["mu"] = format_double(cfg.crc_mu);
    return out;
  }
  const auto& k = cfg.kcrc;
  out["kernel"] = std::string(kernel_name(k.kernel.kind));
  out["beta"] = k.kernel.beta ? format_double(*k.kernel.beta) : "auto";
  if (k.kernel.metric) out["kernel_metric"] = std::string(metric_name(k.kernel.metric->kind));
  out["psi"] = std::string(psi_name(k.psi));
  out["dim"] = k.dim ? std::to_string(*k.dim) : "auto";
  const bool robust = cfg.method == Method::kcrc_robust ||
                      (cfg.method == Method::kcrc_lcd && k.variant == Variant::robust);
  if (robust) {
    out["mu"] = format_double(k.alm.mu);
    out["sigma0"] = format_double(k.alm.sigma0);
    out["rho"] = format_double(k.alm.rho);
    out["tau"] = format_double(k.alm.tau);
    out["max_iter"] = std::to_string(k.alm.max_iter);
  } else {
    out["mu"] = format_double(k.mu);
  }
  if (cfg.method == Method::kcrc_lcd) {
    out["lcd_k"] = std::to_string(cfg.lcd.k);
    if (cfg.lcd.coarse_k) {
      out["lcd_coarse_k"] = std::to_string(*cfg.lcd.coarse_k);
      out["coarse_metric"] = std::string(metric_name(cfg.lcd.coarse_metric.kind));
    }
    std::string fine;
    for (const auto& m : cfg.lcd.fine_metrics) {
      fine += (fine.empty() ? "" : ";") + std::string(metric_name(m.kind));
    }
    out["fine_metrics"] = fine;
  }
  return out;
}

std::vector<MethodConfig> default_same_direction_methods() {
  MethodConfig crc;
  crc.method = Method::crc_gd;
  MethodConfig gd;
  gd.method = Method::kcrc_gd;
  gd.kcrc.kernel = KernelSpec::rbf();
  MethodConfig lcd;
  lcd.method = Method::kcrc_lcd;
  lcd.kcrc.kernel = KernelSpec::rbf();
  lcd.lcd.k = 20;
  return {crc, gd, lcd};
}

std::vector<SameDirectionRow> run_same_direction(const SameDirectionConfig& cfg) {
  if (cfg.m_list.empty()) throw ArgumentError("same-direction run needs at least one dimension");
  if (cfg.seeds.empty()) throw ArgumentError("same-direction run needs at least one seed");
  const auto methods = cfg.methods.empty() ? default_same_direction_methods() : cfg.methods;
  std::vector<SameDirectionRow> rows;
  for (const Index m : cfg.m_list) {
    std::vector<SameDirectionRow> block(methods.size());
    for (std::size_t i = 0; i < methods.size(); ++i) {
      block[i].m = m;
      block[i].method = std::string(method_name(methods[i].method));
      block[i].min_accuracy = 1.0;
    }
    for (const auto seed : cfg.seeds) {
      const Dictionary data = make_same_direction(
          {.dim = m, .per_class = 2 * cfg.per_class, .noise_variance = cfg.noise_variance,
           .seed = seed});
      const Split split = stratified_split(data, {.per_class_train = cfg.per_class, .seed = seed});
      for (std::size_t i = 0; i < methods.size(); ++i) {
        MethodConfig mc = methods[i];
        mc.kcrc.seed = seed;
        const auto report =
            evaluate(make_classifier(split.train, mc), split.test, threads_only(cfg.threads));
        block[i].accuracy += report.accuracy;
        block[i].min_accuracy = std::min(block[i].min_accuracy, report.accuracy);
        block[i].median_ms += report.timing.median_ms;
      }
    }
    const auto seeds = static_cast<double>(cfg.seeds.size());
    for (auto& row : block) {
      row.accuracy /= seeds;
      row.median_ms /= seeds;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

CsvTable to_table(const std::vector<SameDirectionRow>& rows) {
  CsvTable t{{"m", "method", "accuracy", "min_accuracy", "median_ms"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.m), r.method, format_double(r.accuracy),
                      format_double(r.min_accuracy), format_double(r.median_ms)});
  }
  return t;
}

std::vector<SweepRow> run_dictionary_sweep(const Dictionary& d, const SweepConfig& cfg,
                                           const Dictionary* test) {
  if (cfg.sizes.empty()) throw ArgumentError("sweep needs at least one dictionary size");
  if (cfg.methods.empty()) throw ArgumentError("sweep needs at least one method");
  if (cfg.repeats < 1) throw ArgumentError("sweep needs at least one repeat");

  // One entry per (method, k) pair, in output order.
  std::vector<std::pair<MethodConfig, std::optional<Index>>> variants;
  for (const auto& mc : cfg.methods) {
    if (mc.method != Method::kcrc_lcd) {
      variants.emplace_back(mc, std::nullopt);
    } else if (cfg.lcd_ks.empty()) {
      variants.emplace_back(mc, mc.lcd.k);
    } else {
      for (const Index k : cfg.lcd_ks) {
        MethodConfig with_k = mc;
        with_k.lcd.k = k;
        variants.emplace_back(with_k, k);
      }
    }
  }

  std::vector<SweepRow> rows;
  for (const Index size : cfg.sizes) {
    std::vector<std::vector<double>> acc(variants.size());
    for (Index r = 0; r < cfg.repeats; ++r) {
      const auto seed = cfg.seed + static_cast<std::uint64_t>(r);
      const Split split = stratified_split(d, {.per_class_train = size, .seed = seed});
      const Dictionary& queries = test ? *test : split.test;
      for (std::size_t v = 0; v < variants.size(); ++v) {
        MethodConfig mc = variants[v].first;
        mc.kcrc.seed = seed;
        if (mc.lcd.coarse_k) mc.lcd.coarse_k = std::min(*mc.lcd.coarse_k, split.train.size());
        mc.lcd.k = std::min(mc.lcd.k, split.train.size());
        acc[v].push_back(
            evaluate(make_classifier(split.train, mc), queries, threads_only(cfg.threads)).accuracy);
      }
    }
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const auto& a = acc[v];
      const double mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
      double var = 0.0;
      for (const double x : a) var += (x - mean) * (x - mean);
      const double sd = a.size() > 1 ? std::sqrt(var / static_cast<double>(a.size() - 1)) : 0.0;
      rows.push_back({size, std::string(method_name(variants[v].first.method)), variants[v].second,
                      mean, sd, cfg.repeats});
    }
  }
  return rows;
}

CsvTable to_table(const std::vector<SweepRow>& rows) {
  CsvTable t{{"size_per_class", "method", "lcd_k", "accuracy", "accuracy_sd", "repeats"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.size), r.method, r.k ? std::to_string(*r.k) : "",
                      format_double(r.accuracy), format_double(r.accuracy_sd),
                      std::to_string(r.repeats)});
  }
  return t;
}

std::vector<TimingRow> run_timing(const TimingConfig& cfg) {
  if (cfg.queries < 1) throw ArgumentError("timing run needs at least one query");
  const Index test_per_class = (cfg.queries + 1) / 2;
  const Dictionary data = make_same_direction(
      {.dim = cfg.m, .per_class = cfg.per_class + test_per_class, .seed = cfg.seed});
  const Split split = stratified_split(data, {.per_class_train = cfg.per_class, .seed = cfg.seed});

  // Alternate classes so any prefix of the query list stays balanced.
  std::vector<Index> order;
  const auto members = split.test.class_members();
  for (Index i = 0; static_cast<Index>(order.size()) < cfg.queries; ++i) {
    for (const auto& [label, idx] : members) {
      if (i < static_cast<Index>(idx.size()) && static_cast<Index>(order.size()) < cfg.queries) {
        order.push_back(idx[static_cast<std::size_t>(i)]);
      }
    }
  }
  const Dictionary queries = split.test.select(order);

  MethodConfig gd;
  gd.method = Method::kcrc_gd;
  gd.kcrc.kernel = KernelSpec::rbf();
  gd.kcrc.seed = cfg.seed;
  MethodConfig lcd = gd;
  lcd.method = Method::kcrc_lcd;
  lcd.lcd.k = cfg.k;

  std::vector<TimingRow> rows;
  for (const auto& mc : {gd, lcd}) {
    const auto report = evaluate(make_classifier(split.train, mc), queries, threads_only(1));
    rows.push_back({std::string(method_name(mc.method)), report.timing, report.accuracy,
                    static_cast<double>(report.n_early_exit) /
                        static_cast<double>(std::max<Index>(report.n_queries, 1))});
  }
  return rows;
}

CsvTable to_table(const std::vector<TimingRow>& rows) {
  CsvTable t{{"method", "median_ms", "mean_ms", "count", "accuracy", "early_exit_rate"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.method, format_double(r.timing.median_ms), format_double(r.timing.mean_ms),
                      std::to_string(r.timing.count), format_double(r.accuracy),
                      format_double(r.early_exit_rate)});
  }
  return t;
}

}  // namespace kcrc
