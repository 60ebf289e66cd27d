#include "qpath/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <sstream>

#include "qpath/error.hpp"

namespace qpath {

Dataset::Dataset(std::vector<SparseRow> rows, std::vector<int> labels,
                 std::size_t dim, bool bias_augmented)
    : rows_(std::move(rows)),
      labels_(std::move(labels)),
      dim_(dim),
      bias_augmented_(bias_augmented) {
  if (rows_.empty()) throw Error("dataset must contain at least one instance");
  if (rows_.size() != labels_.size())
    throw Error("dataset has " + std::to_string(rows_.size()) + " rows but " +
                std::to_string(labels_.size()) + " labels");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (labels_[i] != 1 && labels_[i] != -1)
      throw Error("label of instance " + std::to_string(i) + " is not +1/-1");
    const SparseRow& row = rows_[i];
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k].index >= dim_)
        throw Error("feature index out of range in instance " +
                    std::to_string(i));
      if (k > 0 && row[k].index <= row[k - 1].index)
        throw Error("feature indices not strictly ascending in instance " +
                    std::to_string(i));
    }
    if (bias_augmented_ &&
        (row.empty() || row.back().index + 1 != dim_ || row.back().value != 1.0))
      throw Error("bias column missing in instance " + std::to_string(i));
  }
}

std::size_t Dataset::positives() const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

namespace {

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_index(std::string_view token, std::size_t& out) {
  if (token.empty()) return false;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    if (pos > start) tokens.push_back(line.substr(start, pos - start));
  }
  return tokens;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
  return std::string(buf.data(), ptr);
}

}  // namespace

Dataset parse_libsvm(std::istream& in) {
  std::vector<SparseRow> rows;
  std::vector<int> labels;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos)
      view = view.substr(0, hash);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    auto tokens = split_ws(view);
    if (tokens.empty()) continue;

    double label = 0.0;
    if (tokens[0].find(':') != std::string_view::npos ||
        !parse_double(tokens[0], label))
      throw ParseError("missing or non-numeric label", line_no);

    SparseRow row;
    row.reserve(tokens.size() - 1);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos)
        throw ParseError("expected <index>:<value>, got '" +
                             std::string(tokens[t]) + "'",
                         line_no);
      std::size_t index = 0;
      double value = 0.0;
      if (!parse_index(tokens[t].substr(0, colon), index) || index == 0)
        throw ParseError("invalid feature index in '" + std::string(tokens[t]) +
                             "'",
                         line_no);
      if (!parse_double(tokens[t].substr(colon + 1), value))
        throw ParseError("non-numeric feature value in '" +
                             std::string(tokens[t]) + "'",
                         line_no);
      if (!row.empty() && index - 1 <= row.back().index)
        throw ParseError("feature indices are not ascending", line_no);
      row.push_back({index - 1, value});
    }
    if (!row.empty()) dim = std::max(dim, row.back().index + 1);
    rows.push_back(std::move(row));
    labels.push_back(label > 0.0 ? 1 : -1);
  }
  if (rows.empty()) throw ParseError("empty input", 0);
  return Dataset(std::move(rows), std::move(labels), dim);
}

Dataset parse_libsvm(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in);
}

Dataset load_libsvm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open data file " + path.string());
  return parse_libsvm(in);
}

void write_libsvm(std::ostream& out, const Dataset& ds) {
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out << (ds.label(i) > 0 ? "+1" : "-1");
    for (const Feature& f : ds.row(i))
      out << ' ' << (f.index + 1) << ':' << format_double(f.value);
    out << '\n';
  }
}

std::string to_libsvm(const Dataset& ds) {
  std::ostringstream out;
  write_libsvm(out, ds);
  return out.str();
}

Dataset augment_bias(const Dataset& ds) {
  if (ds.bias_augmented()) throw Error("dataset is already bias-augmented");
  std::vector<SparseRow> rows = ds.rows();
  for (SparseRow& row : rows) row.push_back({ds.d(), 1.0});
  return Dataset(std::move(rows), ds.labels(), ds.d() + 1, true);
}

Dataset widen(const Dataset& ds, std::size_t dim) {
  if (ds.bias_augmented()) throw Error("cannot widen a bias-augmented dataset");
  if (dim < ds.d())
    throw Error("data has " + std::to_string(ds.d()) +
                " features, more than the expected " + std::to_string(dim));
  return Dataset(ds.rows(), ds.labels(), dim, false);
}

std::string fingerprint(const Dataset& ds) {
  std::ostringstream canon;
  canon << "n=" << ds.n() << " d=" << ds.d()
        << " bias=" << (ds.bias_augmented() ? 1 : 0) << '\n';
  write_libsvm(canon, ds);
  const std::string text = canon.str();

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), text.data(), text.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
    throw Error("SHA-256 computation failed");

  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    hex.push_back(kHex[digest[k] >> 4]);
    hex.push_back(kHex[digest[k] & 0xF]);
  }
  return hex;
}

double dot(const SparseRow& row, std::span<const double> dense) {
  double s = 0.0;
  for (const Feature& f : row) s += f.value * dense[f.index];
  return s;
}

}  // namespace qpath
