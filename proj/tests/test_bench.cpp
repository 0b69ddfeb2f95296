#include <doctest.h>

#include <atomic>
#include <set>
#include <sstream>

#include "kcrc/bench.hpp"
#include "kcrc/errors.hpp"
#include "support.hpp"

using namespace kcrc;
using kcrc::testing::gaussian_blobs;

namespace {

ClassificationResult labelled(Label label) {
  ClassificationResult r;
  r.label = label;
  return r;
}

// Query atoms carry their label in the first coordinate.
Dictionary tagged_queries(Index per_class) {
  Eigen::MatrixXd atoms(2, 2 * per_class);
  std::vector<Label> labels;
  for (Index k = 0; k < 2 * per_class; ++k) {
    const Label c = k < per_class ? 1 : 2;
    atoms(0, k) = c;
    atoms(1, k) = static_cast<double>(k);
    labels.push_back(c);
  }
  return Dictionary(FeatureMatrix(atoms), labels);
}

// Reference tally of a label sequence.
std::map<std::pair<Label, Label>, Index> recount(const Dictionary& test, const Classifier& f) {
  std::map<std::pair<Label, Label>, Index> tally;
  for (Index q = 0; q < test.size(); ++q) {
    ++tally[{test.label(q), f(Eigen::VectorXd(test.atom(q))).label}];
  }
  return tally;
}

}  // namespace

TEST_SUITE("evaluate") {
  TEST_CASE("perfect classifier") {
    const Dictionary test = tagged_queries(10);
    const auto report = evaluate(
        [](const Eigen::VectorXd& y) { return labelled(static_cast<Label>(y(0))); }, test);
    CHECK(report.accuracy == 1.0);
    CHECK(report.n_queries == 20);
    CHECK(report.confusion.classes == std::vector<Label>{1, 2});
    CHECK(report.confusion.counts == std::vector<std::vector<Index>>{{10, 0}, {0, 10}});
    CHECK(report.timing.count == 20);
    CHECK(report.timing.median_ms >= 0.0);
  }

  TEST_CASE("constant classifier on balanced classes") {
    const Dictionary test = tagged_queries(10);
    const auto report = evaluate([](const Eigen::VectorXd&) { return labelled(1); }, test);
    CHECK(report.accuracy == 0.5);
    CHECK(report.confusion.counts == std::vector<std::vector<Index>>{{10, 0}, {10, 0}});
  }

  TEST_CASE("confusion matrix agrees with an independent recount") {
    const Dictionary test = gaussian_blobs(3, 3, 15, 1.0, 4);
    const Classifier f = [](const Eigen::VectorXd& y) {
      return labelled(y(0) > 0.5 ? 0 : (y(1) > 0.5 ? 1 : 2));
    };
    const auto tally = recount(test, f);
    const auto report = evaluate(f, test);
    const auto& c = report.confusion;
    Index diagonal = 0;
    for (std::size_t i = 0; i < c.classes.size(); ++i) {
      for (std::size_t j = 0; j < c.classes.size(); ++j) {
        const auto it = tally.find({c.classes[i], c.classes[j]});
        CHECK(c.counts[i][j] == (it == tally.end() ? 0 : it->second));
      }
      diagonal += c.counts[i][i];
    }
    CHECK(c.total() == test.size());
    CHECK(c.trace() == diagonal);
    CHECK(report.accuracy == doctest::Approx(static_cast<double>(diagonal) / 45.0));
  }

  TEST_CASE("predicted labels outside the test classes get their own column") {
    const Dictionary test = tagged_queries(2);
    const auto report = evaluate([](const Eigen::VectorXd&) { return labelled(9); }, test);
    CHECK(report.confusion.classes == std::vector<Label>{1, 2, 9});
    CHECK(report.accuracy == 0.0);
  }

  TEST_CASE("few failures are counted, many abort") {
    const Dictionary test = tagged_queries(10);
    const auto one_bad = evaluate(
        [](const Eigen::VectorXd& y) {
          if (y(1) == 3.0) throw NumericalError("singular");
          return labelled(static_cast<Label>(y(0)));
        },
        test);
    CHECK(one_bad.n_errors == 1);
    CHECK(one_bad.n_queries == 19);
    CHECK(one_bad.confusion.total() == 19);
    CHECK(one_bad.accuracy == 1.0);

    const Classifier mostly_bad = [](const Eigen::VectorXd& y) {
      if (y(1) < 5.0) throw NumericalError("singular");
      return labelled(static_cast<Label>(y(0)));
    };
    CHECK_THROWS_AS(evaluate(mostly_bad, test), NumericalError);
    const Classifier other = [](const Eigen::VectorXd& y) -> ClassificationResult {
      if (y(1) < 5.0) throw ArgumentError("bad query");
      return labelled(1);
    };
    CHECK_THROWS_AS(evaluate(other, test), Error);
  }

  TEST_CASE("early exits are counted") {
    const Dictionary test = tagged_queries(5);
    const auto report = evaluate(
        [](const Eigen::VectorXd& y) {
          auto r = labelled(static_cast<Label>(y(0)));
          r.early_exit = y(0) == 1.0;
          return r;
        },
        test);
    CHECK(report.n_early_exit == 5);
  }

  TEST_CASE("thread count does not change the outcome") {
    const Dictionary train = gaussian_blobs(4, 3, 10, 2.0, 5);
    const Dictionary test = gaussian_blobs(4, 3, 20, 2.0, 6);
    for (const Method m : {Method::crc_gd, Method::kcrc_gd, Method::kcrc_lcd}) {
      MethodConfig cfg;
      cfg.method = m;
      cfg.lcd.k = 8;
      const Classifier f = make_classifier(train, cfg);
      EvalOptions serial;
      EvalOptions parallel;
      parallel.threads = 4;
      const auto a = evaluate(f, test, serial);
      const auto b = evaluate(f, test, parallel);
      CHECK(a.confusion == b.confusion);
      CHECK(a.accuracy == b.accuracy);
      CHECK(a.n_early_exit == b.n_early_exit);
    }
  }
}

TEST_SUITE("serialisation") {
  TEST_CASE("report and confusion round trip") {
    EvalReport r;
    r.accuracy = 0.1 + 0.2;
    r.confusion = {{-1, 3, 7}, {{4, 0, 1}, {0, 2, 0}, {1, 1, 5}}};
    r.timing = {0.123456789012345, 1.0 / 3.0, 14};
    r.n_queries = 14;
    r.n_errors = 1;
    r.n_early_exit = 6;
    r.config = {{"method", "kcrc-lcd"}, {"kernel", "rbf"}, {"lcd.k", "50"}};
    std::stringstream report;
    std::stringstream confusion;
    write_report(report, r);
    write_confusion(confusion, r.confusion);
    CHECK(confusion.str().rfind("true\\pred,-1,3,7\n", 0) == 0);
    CHECK(parse_report(report, confusion) == r);
  }

  TEST_CASE("format_double round trips") {
    for (const double v : {0.0, 1.0, -2.5, 1e-300, 0.1 + 0.2, 123456.789}) {
      CHECK(std::stod(format_double(v)) == v);
    }
  }

  TEST_CASE("malformed confusion is rejected") {
    std::stringstream ragged("true\\pred,1,2\n1,3\n");
    CHECK_THROWS_AS(parse_confusion(ragged), ParseError);
    std::stringstream header("x,1\n1,3\n");
    CHECK_THROWS_AS(parse_confusion(header), ParseError);
  }

  TEST_CASE("csv table round trip") {
    const CsvTable t{{"m", "method", "accuracy"}, {{"2", "crc-gd", "0.5"}, {"8", "kcrc-lcd", "1"}}};
    std::stringstream buf;
    write_table(buf, t);
    CHECK(buf.str() == "m,method,accuracy\n2,crc-gd,0.5\n8,kcrc-lcd,1\n");
    CHECK(parse_table(buf) == t);
  }
}

TEST_SUITE("methods") {
  TEST_CASE("names round trip") {
    CHECK(method_names() ==
          std::vector<std::string>{"crc-gd", "kcrc-gd", "kcrc-lcd", "kcrc-robust"});
    for (const auto& name : method_names()) CHECK(method_name(parse_method(name)) == name);
    CHECK_THROWS_AS(parse_method("frobnicate"), ArgumentError);
  }

  TEST_CASE("every method classifies separable blobs") {
    const Dictionary train = gaussian_blobs(4, 2, 15, 5.0, 7);
    const Dictionary test = gaussian_blobs(4, 2, 20, 5.0, 8);
    for (const auto& name : method_names()) {
      MethodConfig cfg;
      cfg.method = parse_method(name);
      cfg.lcd.k = 10;
      const auto report = evaluate(make_classifier(train, cfg), test);
      CHECK(report.accuracy >= 0.9);
      CHECK(describe(cfg).at("method") == name);
    }
  }
}

TEST_SUITE("experiments") {
  TEST_CASE("same-direction table shape") {
    SameDirectionConfig cfg;
    cfg.m_list = {2, 8};
    cfg.per_class = 30;
    const auto rows = run_same_direction(cfg);
    CHECK(rows.size() == 6);
    std::set<std::string> methods;
    for (const auto& row : rows) {
      methods.insert(row.method);
      CHECK(row.accuracy >= 0.0);
      CHECK(row.accuracy <= 1.0);
      CHECK(row.min_accuracy <= row.accuracy);
    }
    CHECK(methods.size() == 3);
    const CsvTable t = to_table(rows);
    CHECK(t.rows.size() == 6);
    CHECK(t.header.size() == t.rows.front().size());
  }

  TEST_CASE("dictionary sweep rows and determinism") {
    const Dictionary d = gaussian_blobs(4, 3, 20, 3.0, 9);
    SweepConfig cfg;
    cfg.sizes = {5, 10};
    MethodConfig crc;
    crc.method = Method::crc_gd;
    MethodConfig lcd;
    lcd.method = Method::kcrc_lcd;
    lcd.lcd.k = 50;  // clamped to the training size
    cfg.methods = {crc, lcd};
    cfg.repeats = 3;
    const auto rows = run_dictionary_sweep(d, cfg);
    CHECK(rows.size() == 4);
    for (const auto& row : rows) {
      CHECK(row.repeats == 3);
      CHECK(row.accuracy_sd >= 0.0);
      CHECK(row.k.has_value() == (row.method == "kcrc-lcd"));
    }
    CHECK(to_table(rows) == to_table(run_dictionary_sweep(d, cfg)));
    SweepConfig too_big = cfg;
    too_big.sizes = {20};
    CHECK_THROWS_AS(run_dictionary_sweep(d, too_big), ArgumentError);
    CHECK_NOTHROW(run_dictionary_sweep(d, too_big, &d));
  }

  TEST_CASE("timing rows") {
    const auto rows = run_timing({20, 40, 10, 5, 1});
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
      CHECK(row.timing.count == 5);
      CHECK(row.timing.median_ms >= 0.0);
      CHECK(row.early_exit_rate >= 0.0);
      CHECK(row.early_exit_rate <= 1.0);
    }
    CHECK(rows[0].early_exit_rate == 0.0);
  }
}
