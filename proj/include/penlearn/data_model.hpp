#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace penlearn {

// Raised for malformed or inconsistent input data. The CLI maps these to
// exit status 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Sequence {
  std::string id;
  std::vector<double> values;
};

// Positions are 1-based and inclusive. A changepoint t separates positions
// t and t+1, so it falls inside a label iff start <= t <= end-1.
struct LabelRegion {
  static constexpr int kUnbounded = std::numeric_limits<int>::max();

  std::int64_t start = 1;
  std::int64_t end = 1;
  int min_changes = 0;
  int max_changes = 0;

  bool positive() const { return min_changes >= 1; }
  bool unbounded() const { return max_changes == kUnbounded; }
  friend bool operator==(const LabelRegion&, const LabelRegion&) = default;
};

enum class Censoring { Uncensored, Interval, Left, Right, Both };

// Target interval on the natural-log penalty scale. lo may be -inf, hi may
// be +inf.
struct TargetInterval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  Censoring kind() const;
  bool contains(double log_lambda) const { return lo <= log_lambda && log_lambda <= hi; }
  friend bool operator==(const TargetInterval&, const TargetInterval&) = default;
};

struct ErrorCount {
  long tp = 0;
  long tn = 0;
  long fp = 0;
  long fn = 0;

  long total() const { return tp + tn + fp + fn; }
  long errors() const { return fp + fn; }
  ErrorCount& operator+=(const ErrorCount& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ErrorCount&, const ErrorCount&) = default;
};

struct Dataset {
  std::vector<Sequence> sequences;
  std::map<std::string, std::vector<LabelRegion>> labels;
  std::map<std::string, TargetInterval> targets;
  // Non-fatal findings from loading (e.g. length-1 labels).
  std::vector<std::string> warnings;

  const Sequence* find(const std::string& id) const;
  // Number of sequences with at least one label.
  std::size_t labeled_count() const;
  bool has_labels(const std::string& id) const;

  // Copy restricted to the given ids (labels and targets follow).
  Dataset subset(const std::vector<std::string>& ids) const;
};

struct FoldAssignment {
  std::map<std::string, int> fold;  // 1-based
  int n_folds = 0;

  std::vector<std::string> ids_in(int f) const;
  std::vector<std::string> ids_not_in(int f) const;
};

// CSV loaders. Paths are read as UTF-8 text with '.' decimals.
Dataset load_sequences(const std::filesystem::path& path);
Dataset load_labels(const std::filesystem::path& path, Dataset dataset);
FoldAssignment load_folds(const std::filesystem::path& path);
std::map<std::string, TargetInterval> load_targets(const std::filesystem::path& path);

void write_sequences(const std::filesystem::path& path, const Dataset& dataset);
void write_labels(const std::filesystem::path& path, const Dataset& dataset);
void write_folds(const std::filesystem::path& path, const FoldAssignment& folds);
void write_targets(const std::filesystem::path& path,
                   const std::map<std::string, TargetInterval>& targets);

// Validates one label list against a sequence length; sorts by start and
// throws DataError on any violated invariant.
void validate_labels(const std::string& id, std::vector<LabelRegion>& labels, std::size_t n);

// Shuffles the sorted id list with mt19937_64(seed) (Fisher-Yates, index
// drawn as rng() % (i+1)) and deals ids round-robin into n_folds folds.
FoldAssignment generate_folds(const Dataset& dataset, int n_folds, std::uint64_t seed);
FoldAssignment generate_folds(std::vector<std::string> ids, int n_folds, std::uint64_t seed);

// Number formatting shared by every CSV writer: 17 significant digits,
// "inf" / "-inf" for infinities.
std::string format_double(double x);
double parse_double(std::string_view text);

}  // namespace penlearn
