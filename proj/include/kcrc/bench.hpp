#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "kcrc/classifiers.hpp"
#include "kcrc/dataset.hpp"
#include "kcrc/lcd.hpp"

namespace kcrc {

using Classifier = std::function<ClassificationResult(const Eigen::VectorXd&)>;

struct TimingSummary {
  double median_ms = 0.0;
  double mean_ms = 0.0;
  Index count = 0;

  friend bool operator==(const TimingSummary&, const TimingSummary&) = default;
};

/// Rows are true labels, columns predicted labels, both in `classes` order.
struct ConfusionMatrix {
  std::vector<Label> classes;
  std::vector<std::vector<Index>> counts;

  Index total() const;
  Index trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct EvalReport {
  double accuracy = 0.0;       // trace / total of the confusion matrix
  ConfusionMatrix confusion;
  TimingSummary timing;        // classification only, model fit excluded
  Index n_queries = 0;         // queries that produced a label
  Index n_errors = 0;          // queries whose classifier call threw
  Index n_early_exit = 0;
  std::map<std::string, std::string> config;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline constexpr double kMaxErrorFraction = 0.10;

struct EvalOptions {
  unsigned threads = 1;
  std::map<std::string, std::string> config;
};

/// Classifies every test atom. Per-query failures are counted; if more than
/// kMaxErrorFraction of the queries fail the first failure is rethrown
/// (as NumericalError when it was numerical, Error otherwise).
EvalReport evaluate(const Classifier& classify, const Dictionary& test, const EvalOptions& opts = {});

// Report text format: "key,value" lines. The confusion matrix goes to its own
// CSV whose header is "true\pred" followed by the predicted labels.
void write_report(std::ostream& out, const EvalReport& r);
void write_confusion(std::ostream& out, const ConfusionMatrix& c);
/// Inverse of write_report + write_confusion.
EvalReport parse_report(std::istream& report, std::istream& confusion);
ConfusionMatrix parse_confusion(std::istream& in);

std::string format_double(double v);

enum class Method { crc_gd, kcrc_gd, kcrc_lcd, kcrc_robust };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
std::vector<std::string> method_names();

struct MethodConfig {
  Method method = Method::kcrc_lcd;
  KcrcConfig kcrc;
  LcdConfig lcd;
  double crc_mu = kDefaultMu;
  bool distance_cache = true;
};

/// Fits `cfg` on `train` and returns a thread-safe classification closure.
/// The closure keeps its own copy of the training data.
Classifier make_classifier(const Dictionary& train, const MethodConfig& cfg);

std::map<std::string, std::string> describe(const MethodConfig& cfg);

/// Header row plus string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  friend bool operator==(const CsvTable&, const CsvTable&) = default;
};

void write_table(std::ostream& out, const CsvTable& t);
CsvTable parse_table(std::istream& in);

struct SameDirectionConfig {
  std::vector<Index> m_list{2, 8, 32, 128, 256};
  Index per_class = 200;  // per side: train and test each get this many
  double noise_variance = 0.15;
  std::vector<std::uint64_t> seeds{42};
  std::vector<MethodConfig> methods;  // empty: crc-gd, kcrc-gd, kcrc-lcd with k = 20
  unsigned threads = 1;
};

struct SameDirectionRow {
  Index m = 0;
  std::string method;
  double accuracy = 0.0;  // mean over seeds
  double min_accuracy = 0.0;
  double median_ms = 0.0;  // mean over seeds of the per-query median
};

std::vector<MethodConfig> default_same_direction_methods();
std::vector<SameDirectionRow> run_same_direction(const SameDirectionConfig& cfg);
CsvTable to_table(const std::vector<SameDirectionRow>& rows);

struct SweepConfig {
  std::vector<Index> sizes;          // training atoms per class
  std::vector<MethodConfig> methods;
  std::vector<Index> lcd_ks;         // empty: each lcd method keeps its own k
  Index repeats = 5;
  std::uint64_t seed = 42;
  unsigned threads = 1;
};

struct SweepRow {
  Index size = 0;
  std::string method;
  std::optional<Index> k;  // set for lcd methods
  double accuracy = 0.0;   // mean over repeats
  double accuracy_sd = 0.0;
  Index repeats = 0;
};

/// Repeated stratified splits of `d`. Without `test` the atoms left out of
/// each training split form the test set; with it, every repeat is scored on
/// `test`.
std::vector<SweepRow> run_dictionary_sweep(const Dictionary& d, const SweepConfig& cfg,
                                           const Dictionary* test = nullptr);
CsvTable to_table(const std::vector<SweepRow>& rows);

struct TimingConfig {
  Index m = 500;
  Index per_class = 600;  // training atoms per class
  Index k = 200;
  Index queries = 50;
  std::uint64_t seed = 42;
};

struct TimingRow {
  std::string method;
  TimingSummary timing;
  double accuracy = 0.0;
  double early_exit_rate = 0.0;
};

/// Sequential per-query timings of kcrc-gd against kcrc-lcd on same-direction data.
std::vector<TimingRow> run_timing(const TimingConfig& cfg);
CsvTable to_table(const std::vector<TimingRow>& rows);

}  // namespace kcrc
