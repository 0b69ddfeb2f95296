#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "kcrc/dataset.hpp"
#include "kcrc/errors.hpp"
#include "support.hpp"

using namespace kcrc;
using kcrc::testing::random_matrix;
using kcrc::testing::TempDir;

namespace {

void write_be32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(bytes, 4);
}

void write_idx_images(const std::filesystem::path& path, std::uint32_t count, std::uint32_t rows,
                      std::uint32_t cols, const std::vector<unsigned char>& pixels,
                      std::uint32_t magic = 0x803) {
  std::ofstream out(path, std::ios::binary);
  write_be32(out, magic);
  write_be32(out, count);
  write_be32(out, rows);
  write_be32(out, cols);
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, std::uint32_t count,
                      const std::vector<unsigned char>& labels) {
  std::ofstream out(path, std::ios::binary);
  write_be32(out, 0x801);
  write_be32(out, count);
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

Dictionary random_dictionary(Index m, Index n, std::uint64_t seed) {
  std::vector<Label> labels;
  for (Index k = 0; k < n; ++k) labels.push_back(static_cast<Label>(k % 3));
  return Dictionary(FeatureMatrix(random_matrix(m, n, seed)), std::move(labels));
}

}  // namespace

TEST_SUITE("feature matrix") {
  TEST_CASE("rejects non-finite values and zero rows") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, std::numeric_limits<double>::quiet_NaN(), 4;
    CHECK_THROWS_AS(FeatureMatrix{m}, ArgumentError);
    CHECK_THROWS_AS(FeatureMatrix{Eigen::MatrixXd(0, 3)}, ArgumentError);
  }

  TEST_CASE("dictionary exposes sorted classes and member lists") {
    Dictionary d(FeatureMatrix(random_matrix(2, 5, 1)), {4, 1, 4, 2, 1});
    CHECK(d.classes() == std::vector<Label>{1, 2, 4});
    const auto members = d.class_members();
    CHECK(members.at(4) == std::vector<Index>{0, 2});
    CHECK(members.at(1) == std::vector<Index>{1, 4});
    CHECK_THROWS_AS(Dictionary(FeatureMatrix(random_matrix(2, 3, 1)), {1, 2}), ArgumentError);
  }
}

TEST_SUITE("csv") {
  TEST_CASE("two labelled samples") {
    std::istringstream in("1,0.5,0.5\n2,-0.5,0.5");
    const Dictionary d = parse_csv(in);
    CHECK(d.dim() == 2);
    CHECK(d.size() == 2);
    CHECK(d.labels() == std::vector<Label>{1, 2});
    CHECK(d.matrix()(0, 1) == -0.5);
  }

  TEST_CASE("ragged rows name the offending line") {
    std::istringstream in("1,0.5,0.5\n2,1,2,3\n");
    try {
      parse_csv(in, "data.csv");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("data.csv:2") != std::string::npos);
    }
  }

  TEST_CASE("non-numeric fields and empty input are rejected") {
    std::istringstream bad_field("1,0.5,abc\n");
    CHECK_THROWS_AS(parse_csv(bad_field), ParseError);
    std::istringstream bad_label("x,0.5\n");
    CHECK_THROWS_AS(parse_csv(bad_label), ParseError);
    std::istringstream empty("\n\n");
    CHECK_THROWS_AS(parse_csv(empty), ParseError);
  }

  TEST_CASE("write then parse reproduces every value exactly") {
    const Dictionary d = random_dictionary(5, 20, 7);
    std::stringstream buf;
    write_csv(buf, d);
    const Dictionary back = parse_csv(buf);
    CHECK(back.labels() == d.labels());
    CHECK(back.matrix() == d.matrix());
  }

  TEST_CASE("file round trip") {
    TempDir dir("csv");
    const Dictionary d = random_dictionary(3, 9, 8);
    save_csv(d, dir / "d.csv");
    const Dictionary back = load_csv(dir / "d.csv");
    CHECK(back.matrix() == d.matrix());
    CHECK_THROWS_AS(load_csv(dir / "missing.csv"), ParseError);
  }
}

TEST_SUITE("idx") {
  TEST_CASE("single 2x2 image") {
    TempDir dir("idx");
    write_idx_images(dir / "img", 1, 2, 2, {0, 255, 0, 255});
    write_idx_labels(dir / "lab", 1, {7});
    const Dictionary d = load_idx(dir / "img", dir / "lab");
    CHECK(d.dim() == 4);
    CHECK(d.size() == 1);
    CHECK(d.label(0) == 7);
    CHECK(d.atom(0).transpose() == Eigen::RowVector4d(0, 1, 0, 1));
  }

  TEST_CASE("count mismatch, bad magic and truncation") {
    TempDir dir("idx_bad");
    write_idx_images(dir / "img", 10, 1, 1, std::vector<unsigned char>(10, 3));
    write_idx_labels(dir / "lab9", 9, std::vector<unsigned char>(9, 1));
    CHECK_THROWS_AS(load_idx(dir / "img", dir / "lab9"), FormatError);

    write_idx_labels(dir / "lab10", 10, std::vector<unsigned char>(10, 1));
    write_idx_images(dir / "magic", 10, 1, 1, std::vector<unsigned char>(10, 3), 0x801);
    CHECK_THROWS_AS(load_idx(dir / "magic", dir / "lab10"), FormatError);

    write_idx_images(dir / "short", 10, 2, 2, std::vector<unsigned char>(12, 3));
    CHECK_THROWS_AS(load_idx(dir / "short", dir / "lab10"), FormatError);
    CHECK_NOTHROW(load_idx(dir / "img", dir / "lab10"));
  }
}

TEST_SUITE("normalisation") {
  TEST_CASE("3-4-5 column") {
    Eigen::MatrixXd m(2, 1);
    m << 3, 4;
    const auto n = unit_normalize_columns(m);
    CHECK(n(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(n(1, 0) == doctest::Approx(0.8).epsilon(1e-15));
  }

  TEST_CASE("zero column is perturbed to unit norm") {
    const auto n = unit_normalize_columns(Eigen::MatrixXd::Zero(3, 2), 5);
    for (Index j = 0; j < 2; ++j) CHECK(n.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(n == unit_normalize_columns(Eigen::MatrixXd::Zero(3, 2), 5));
  }

  TEST_CASE("random matrices: unit norms and idempotence") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto once = unit_normalize_columns(random_matrix(10, 10, seed));
      const auto twice = unit_normalize_columns(once);
      CHECK((once.colwise().norm().array() - 1.0).abs().maxCoeff() <= 1e-12);
      CHECK((once - twice).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_SUITE("split") {
  Dictionary two_by_ten() {
    std::vector<Label> labels(20);
    for (int k = 0; k < 20; ++k) labels[static_cast<std::size_t>(k)] = k % 2;
    return Dictionary(FeatureMatrix(random_matrix(2, 20, 3)), labels);
  }

  TEST_CASE("sizes and determinism") {
    const Dictionary d = two_by_ten();
    const Split a = stratified_split(d, {3, 11});
    const Split b = stratified_split(d, {3, 11});
    CHECK(a.train.size() == 6);
    CHECK(a.test.size() == 14);
    CHECK(a.train_indices == b.train_indices);
    CHECK(a.train.matrix() == b.train.matrix());
  }

  TEST_CASE("split is a partition that keeps labels and order") {
    const Dictionary d = two_by_ten();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Split s = stratified_split(d, {4, seed});
      std::vector<Index> all = s.train_indices;
      all.insert(all.end(), s.test_indices.begin(), s.test_indices.end());
      std::sort(all.begin(), all.end());
      std::vector<Index> expected(20);
      std::iota(expected.begin(), expected.end(), Index{0});
      CHECK(all == expected);
      CHECK(std::is_sorted(s.train_indices.begin(), s.train_indices.end()));
      for (std::size_t i = 0; i < s.train_indices.size(); ++i) {
        CHECK(s.train.label(static_cast<Index>(i)) == d.label(s.train_indices[i]));
      }
      for (const Label c : {0, 1}) {
        CHECK(std::count(s.train.labels().begin(), s.train.labels().end(), c) == 4);
      }
    }
  }

  TEST_CASE("whole classes leave an empty test side") {
    const Split s = stratified_split(two_by_ten(), {10, 1});
    CHECK(s.test.size() == 0);
    CHECK(s.test.empty());
    CHECK_THROWS_AS(stratified_split(two_by_ten(), {11, 1}), ArgumentError);
  }
}

TEST_SUITE("same-direction generator") {
  TEST_CASE("class sizes, labels and class means") {
    const Dictionary d = make_same_direction({2, 200, 0.15, 42});
    CHECK(d.size() == 400);
    CHECK(d.classes() == std::vector<Label>{kClassQ, kClassW});
    const auto members = d.class_members();
    CHECK(members.at(kClassQ).size() == 200);
    CHECK(members.at(kClassW).size() == 200);
    const Eigen::Vector2d mean_q = d.matrix().leftCols(200).rowwise().mean();
    const Eigen::Vector2d mean_w = d.matrix().rightCols(200).rowwise().mean();
    for (int i = 0; i < 2; ++i) {
      CHECK(mean_q(i) >= 1.8);
      CHECK(mean_q(i) <= 2.2);
      CHECK(mean_w(i) >= -2.2);
      CHECK(mean_w(i) <= -1.8);
    }
  }

  TEST_CASE("noise-free values stay inside their boxes") {
    const Dictionary d = make_same_direction({1, 200, 0.0, 3});
    CHECK(d.matrix().leftCols(200).minCoeff() >= 1.0);
    CHECK(d.matrix().leftCols(200).maxCoeff() <= 3.0);
    CHECK(d.matrix().rightCols(200).maxCoeff() <= -1.0);
  }

  TEST_CASE("seeded determinism") {
    CHECK(make_same_direction({4, 10, 0.15, 9}).matrix() ==
          make_same_direction({4, 10, 0.15, 9}).matrix());
    CHECK(make_same_direction({4, 10, 0.15, 9}).matrix() !=
          make_same_direction({4, 10, 0.15, 10}).matrix());
  }
}
