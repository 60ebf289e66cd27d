#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qpath {

struct Feature {
  std::size_t index;  // 0-based
  double value;

  friend bool operator==(const Feature&, const Feature&) = default;
};

using SparseRow = std::vector<Feature>;

/// Sparse labeled instances with labels in {+1, -1}.
///
/// Immutable after construction. The constructor enforces the invariants:
/// n >= 1, labels are exactly +1 or -1, feature indices are strictly
/// ascending within a row and lie in [0, d), and a bias-augmented dataset
/// carries the value 1 at index d-1 of every row.
class Dataset {
 public:
  Dataset(std::vector<SparseRow> rows, std::vector<int> labels, std::size_t dim,
          bool bias_augmented = false);

  std::size_t n() const noexcept { return rows_.size(); }
  std::size_t d() const noexcept { return dim_; }
  bool bias_augmented() const noexcept { return bias_augmented_; }

  const SparseRow& row(std::size_t i) const { return rows_[i]; }
  const std::vector<SparseRow>& rows() const noexcept { return rows_; }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  std::size_t positives() const noexcept;
  std::size_t negatives() const noexcept { return n() - positives(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<SparseRow> rows_;
  std::vector<int> labels_;
  std::size_t dim_;
  bool bias_augmented_;
};

/// Reads LIBSVM text: `<label> <idx>:<val> ...` with 1-based ascending
/// indices. `#` starts a comment, blank lines are skipped, CRLF is accepted.
/// Positive labels map to +1, every other numeric label to -1.
/// Throws ParseError.
Dataset parse_libsvm(std::istream& in);
Dataset parse_libsvm(std::string_view text);
Dataset load_libsvm(const std::filesystem::path& path);

/// Writes LIBSVM text with 1-based indices and 17 significant digits, so
/// that parse_libsvm(write_libsvm(ds)) == ds for any dataset whose last
/// feature column is populated.
void write_libsvm(std::ostream& out, const Dataset& ds);
std::string to_libsvm(const Dataset& ds);

/// Appends a constant 1 feature at index d. Throws Error when already
/// augmented.
Dataset augment_bias(const Dataset& ds);

/// Same instances in a feature space of dimension `dim` >= d. Used to align
/// evaluation data with the training dimension before bias augmentation.
Dataset widen(const Dataset& ds, std::size_t dim);

/// SHA-256 (hex) of the canonical serialization of the parsed dataset.
/// Formatting differences in the source file do not change it.
std::string fingerprint(const Dataset& ds);

double dot(const SparseRow& row, std::span<const double> dense);

}  // namespace qpath
