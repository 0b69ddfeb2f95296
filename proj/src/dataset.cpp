#include "kcrc/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "kcrc/errors.hpp"

namespace kcrc {

FeatureMatrix::FeatureMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() < 1) {
    throw ArgumentError("feature matrix needs at least one row");
  }
  if (!values_.allFinite()) {
    throw ArgumentError("feature matrix contains non-finite values");
  }
}

Dictionary::Dictionary(FeatureMatrix atoms, std::vector<Label> labels)
    : atoms_(std::move(atoms)), labels_(std::move(labels)) {
  if (static_cast<Index>(labels_.size()) != atoms_.cols()) {
    throw ArgumentError("dictionary has " + std::to_string(atoms_.cols()) + " atoms but " +
                        std::to_string(labels_.size()) + " labels");
  }
  std::set<Label> distinct(labels_.begin(), labels_.end());
  classes_.assign(distinct.begin(), distinct.end());
}

std::map<Label, std::vector<Index>> Dictionary::class_members() const {
  std::map<Label, std::vector<Index>> members;
  for (Index k = 0; k < size(); ++k) {
    members[labels_[static_cast<std::size_t>(k)]].push_back(k);
  }
  return members;
}

Dictionary Dictionary::select(std::span<const Index> indices) const {
  Eigen::MatrixXd sub(dim(), static_cast<Index>(indices.size()));
  std::vector<Label> sub_labels;
  sub_labels.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const Index k = indices[j];
    if (k < 0 || k >= size()) {
      throw ArgumentError("atom index " + std::to_string(k) + " out of range");
    }
    sub.col(static_cast<Index>(j)) = atoms_.col(k);
    sub_labels.push_back(labels_[static_cast<std::size_t>(k)]);
  }
  return Dictionary(FeatureMatrix(std::move(sub)), std::move(sub_labels));
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace

Dictionary parse_csv(std::istream& in, const std::string& source) {
  std::vector<Label> labels;
  std::vector<double> values;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_fields(body);
    const auto where = source + ":" + std::to_string(line_no);
    if (width == 0) {
      if (fields.size() < 2) {
        throw ParseError(where + ": expected a label and at least one feature");
      }
      width = fields.size();
    } else if (fields.size() != width) {
      throw ParseError(where + ": row has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(width));
    }
    Label label = 0;
    if (!parse_number(fields[0], label)) {
      throw ParseError(where + ": label '" + std::string(trim(fields[0])) +
                       "' is not an integer");
    }
    labels.push_back(label);
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double v = 0.0;
      if (!parse_number(fields[f], v) || !std::isfinite(v)) {
        throw ParseError(where + ": field " + std::to_string(f + 1) + " ('" +
                         std::string(trim(fields[f])) + "') is not a finite number");
      }
      values.push_back(v);
    }
  }
  if (labels.empty()) {
    throw ParseError(source + ": no samples");
  }
  const auto m = static_cast<Index>(width - 1);
  const auto n = static_cast<Index>(labels.size());
  Eigen::MatrixXd atoms = Eigen::Map<const Eigen::MatrixXd>(values.data(), m, n);
  return Dictionary(FeatureMatrix(std::move(atoms)), std::move(labels));
}

Dictionary load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open " + path.string());
  }
  return parse_csv(in, path.string());
}

void write_csv(std::ostream& out, const Dictionary& d) {
  std::array<char, 64> buf{};
  for (Index k = 0; k < d.size(); ++k) {
    out << d.label(k);
    for (Index i = 0; i < d.dim(); ++i) {
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), d.matrix()(i, k));
      out << ',' << std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data()));
    }
    out << '\n';
  }
}

void save_csv(const Dictionary& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw ParseError("cannot write " + path.string());
  }
  write_csv(out, d);
}

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw FormatError(path.string() + ": truncated header");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

}  // namespace

Dictionary load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_bytes(images);
  const auto lab = read_bytes(labels);

  if (const auto magic = read_be32(img, 0, images); magic != kIdxImageMagic) {
    throw FormatError(images.string() + ": bad image magic " + std::to_string(magic));
  }
  if (const auto magic = read_be32(lab, 0, labels); magic != kIdxLabelMagic) {
    throw FormatError(labels.string() + ": bad label magic " + std::to_string(magic));
  }
  const std::size_t count = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t label_count = read_be32(lab, 4, labels);
  if (count != label_count) {
    throw FormatError("image count " + std::to_string(count) + " does not match label count " +
                      std::to_string(label_count));
  }
  const std::size_t pixels = rows * cols;
  if (count == 0 || pixels == 0) {
    throw FormatError(images.string() + ": empty image set");
  }
  if (img.size() < 16 + count * pixels) {
    throw FormatError(images.string() + ": truncated pixel data");
  }
  if (lab.size() < 8 + count) {
    throw FormatError(labels.string() + ": truncated label data");
  }

  Eigen::MatrixXd atoms(static_cast<Index>(pixels), static_cast<Index>(count));
  std::vector<Label> out_labels(count);
  for (std::size_t s = 0; s < count; ++s) {
    const unsigned char* px = img.data() + 16 + s * pixels;
    for (std::size_t p = 0; p < pixels; ++p) {
      atoms(static_cast<Index>(p), static_cast<Index>(s)) = px[p] / 255.0;
    }
    out_labels[s] = lab[8 + s];
  }
  return Dictionary(FeatureMatrix(std::move(atoms)), std::move(out_labels));
}

Eigen::MatrixXd unit_normalize_columns(const Eigen::MatrixXd& m, std::uint64_t seed) {
  Eigen::MatrixXd out = m;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-kColumnPerturbation, kColumnPerturbation);
  for (Index j = 0; j < out.cols(); ++j) {
    auto col = out.col(j);
    double norm = col.norm();
    // Retry in case the noise lands on the zero vector again.
    while (norm < kDegenerateColumnNorm) {
      for (Index i = 0; i < col.size(); ++i) col(i) += jitter(rng);
      norm = col.norm();
    }
    col /= norm;
  }
  return out;
}

FeatureMatrix unit_normalize_columns(const FeatureMatrix& m, std::uint64_t seed) {
  return FeatureMatrix(unit_normalize_columns(m.values(), seed));
}

Split stratified_split(const Dictionary& d, const SplitSpec& spec) {
  if (spec.per_class_train < 1) {
    throw ArgumentError("per-class training count must be positive");
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<bool> in_train(static_cast<std::size_t>(d.size()), false);
  for (const auto& [label, members] : d.class_members()) {
    if (spec.per_class_train > static_cast<Index>(members.size())) {
      throw ArgumentError("class " + std::to_string(label) + " has " +
                          std::to_string(members.size()) + " atoms, cannot draw " +
                          std::to_string(spec.per_class_train));
    }
    auto shuffled = members;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (Index i = 0; i < spec.per_class_train; ++i) {
      in_train[static_cast<std::size_t>(shuffled[static_cast<std::size_t>(i)])] = true;
    }
  }
  std::vector<Index> train_idx;
  std::vector<Index> test_idx;
  for (Index k = 0; k < d.size(); ++k) {
    (in_train[static_cast<std::size_t>(k)] ? train_idx : test_idx).push_back(k);
  }
  auto train = d.select(train_idx);
  auto test = d.select(test_idx);
  return Split{std::move(train), std::move(test), std::move(train_idx), std::move(test_idx)};
}

Dictionary make_same_direction(const SameDirectionSpec& spec) {
  if (spec.dim < 1 || spec.per_class < 1) {
    throw ArgumentError("same-direction data needs dim >= 1 and per_class >= 1");
  }
  if (!(spec.noise_variance >= 0.0)) {
    throw ArgumentError("noise variance must be non-negative");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> box(1.0, 3.0);
  std::normal_distribution<double> noise(0.0, std::sqrt(spec.noise_variance));
  const bool noisy = spec.noise_variance > 0.0;

  const Index n = 2 * spec.per_class;
  Eigen::MatrixXd atoms(spec.dim, n);
  std::vector<Label> labels(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const bool q = j < spec.per_class;
    labels[static_cast<std::size_t>(j)] = q ? kClassQ : kClassW;
    for (Index i = 0; i < spec.dim; ++i) {
      const double base = box(rng);
      const double eps = noisy ? noise(rng) : 0.0;
      atoms(i, j) = (q ? base : -base) + eps;
    }
  }
  return Dictionary(FeatureMatrix(std::move(atoms)), std::move(labels));
}

}  // namespace kcrc
