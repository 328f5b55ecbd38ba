#include "penlearn/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "csv.hpp"

namespace penlearn {

Censoring TargetInterval::kind() const {
  const bool lo_fin = std::isfinite(lo);
  const bool hi_fin = std::isfinite(hi);
  if (lo_fin && hi_fin) return lo == hi ? Censoring::Uncensored : Censoring::Interval;
  if (!lo_fin && hi_fin) return Censoring::Left;
  if (lo_fin && !hi_fin) return Censoring::Right;
  return Censoring::Both;
}

const Sequence* Dataset::find(const std::string& id) const {
  for (const auto& s : sequences)
    if (s.id == id) return &s;
  return nullptr;
}

std::size_t Dataset::labeled_count() const {
  std::size_t n = 0;
  for (const auto& [id, regions] : labels)
    if (!regions.empty()) ++n;
  return n;
}

bool Dataset::has_labels(const std::string& id) const {
  auto it = labels.find(id);
  return it != labels.end() && !it->second.empty();
}

Dataset Dataset::subset(const std::vector<std::string>& ids) const {
  Dataset out;
  std::set<std::string> keep(ids.begin(), ids.end());
  for (const auto& s : sequences)
    if (keep.count(s.id)) out.sequences.push_back(s);
  for (const auto& [id, l] : labels)
    if (keep.count(id)) out.labels[id] = l;
  for (const auto& [id, t] : targets)
    if (keep.count(id)) out.targets[id] = t;
  return out;
}

std::vector<std::string> FoldAssignment::ids_in(int f) const {
  std::vector<std::string> out;
  for (const auto& [id, k] : fold)
    if (k == f) out.push_back(id);
  return out;
}

std::vector<std::string> FoldAssignment::ids_not_in(int f) const {
  std::vector<std::string> out;
  for (const auto& [id, k] : fold)
    if (k != f) out.push_back(id);
  return out;
}

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(std::string_view text) {
  auto s = csv::trim(text);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s == "inf" || s == "Inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  if (s == "-inf" || s == "-Inf" || s == "-infinity") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

namespace {

long parse_int(std::string_view text) {
  auto s = csv::trim(text);
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

Dataset load_sequences(const std::filesystem::path& path) {
  csv::Reader reader(path, {"sequenceID", "value"});
  Dataset ds;
  std::map<std::string, std::size_t> index;
  std::vector<std::string_view> row;
  while (reader.next(row)) {
    const auto line = reader.line();
    std::string id(csv::trim(row[0]));
    if (id.empty()) throw FormatError("empty sequenceID in " + path.string() + " line " + std::to_string(line));
    double v = 0.0;
    try {
      v = parse_double(row[1]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(path.string() + ": " + e.what(), line);
    }
    if (!std::isfinite(v)) throw ParseError(path.string() + ": non-finite value", line);
    auto [it, inserted] = index.try_emplace(id, ds.sequences.size());
    if (inserted) ds.sequences.push_back({id, {}});
    ds.sequences[it->second].values.push_back(v);
  }
  return ds;
}

void validate_labels(const std::string& id, std::vector<LabelRegion>& labels, std::size_t n) {
  for (const auto& l : labels) {
    if (l.start < 1 || l.start > l.end)
      throw DataError("label on " + id + ": start " + std::to_string(l.start) + " > end " +
                      std::to_string(l.end) + " or start < 1");
    if (static_cast<std::size_t>(l.end) > n)
      throw DataError("label on " + id + ": end " + std::to_string(l.end) +
                      " exceeds sequence length " + std::to_string(n));
    if (l.min_changes < 0 || l.min_changes > l.max_changes)
      throw DataError("label on " + id + ": invalid change bounds");
  }
  std::sort(labels.begin(), labels.end(),
            [](const LabelRegion& a, const LabelRegion& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i].start <= labels[i - 1].end)
      throw DataError("overlapping labels on " + id + " at positions " +
                      std::to_string(labels[i].start) + ".." + std::to_string(labels[i - 1].end));
}

Dataset load_labels(const std::filesystem::path& path, Dataset dataset) {
  csv::Reader reader(path, {"sequenceID", "start", "end", "min_changes", "max_changes"});
  std::map<std::string, std::vector<LabelRegion>> loaded;
  std::vector<std::string_view> row;
  while (reader.next(row)) {
    const auto line = reader.line();
    std::string id(csv::trim(row[0]));
    if (id.empty()) throw FormatError("empty sequenceID in " + path.string() + " line " + std::to_string(line));
    if (!dataset.find(id)) throw ParseError("unknown sequenceID '" + id + "'", line);
    LabelRegion l;
    try {
      l.start = parse_int(row[1]);
      l.end = parse_int(row[2]);
      l.min_changes = static_cast<int>(parse_int(row[3]));
      auto mx = csv::trim(row[4]);
      l.max_changes = (mx == "inf" || mx == "Inf") ? LabelRegion::kUnbounded
                                                   : static_cast<int>(parse_int(mx));
    } catch (const std::invalid_argument& e) {
      throw ParseError(path.string() + ": " + e.what(), line);
    }
    loaded[id].push_back(l);
  }
  for (auto& [id, regions] : loaded) {
    validate_labels(id, regions, dataset.find(id)->values.size());
    for (const auto& l : regions)
      if (l.start == l.end && l.positive())
        dataset.warnings.push_back("label " + id + ":" + std::to_string(l.start) +
                                   " has length 1 and cannot contain a changepoint");
    dataset.labels[id] = std::move(regions);
  }
  return dataset;
}

FoldAssignment load_folds(const std::filesystem::path& path) {
  csv::Reader reader(path, {"sequenceID", "fold"});
  FoldAssignment fa;
  std::vector<std::string_view> row;
  while (reader.next(row)) {
    std::string id(csv::trim(row[0]));
    long f = 0;
    try {
      f = parse_int(row[1]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(path.string() + ": " + e.what(), reader.line());
    }
    if (id.empty() || f < 1) throw ParseError("invalid fold row", reader.line());
    if (!fa.fold.emplace(id, static_cast<int>(f)).second)
      throw ParseError("sequence '" + id + "' assigned twice", reader.line());
    fa.n_folds = std::max(fa.n_folds, static_cast<int>(f));
  }
  for (int f = 1; f <= fa.n_folds; ++f)
    if (fa.ids_in(f).empty()) throw DataError("fold " + std::to_string(f) + " is empty");
  return fa;
}

std::map<std::string, TargetInterval> load_targets(const std::filesystem::path& path) {
  csv::Reader reader(path, {"sequenceID", "min_log_lambda", "max_log_lambda"});
  std::map<std::string, TargetInterval> out;
  std::vector<std::string_view> row;
  while (reader.next(row)) {
    TargetInterval t;
    try {
      t.lo = parse_double(row[1]);
      t.hi = parse_double(row[2]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(path.string() + ": " + e.what(), reader.line());
    }
    if (std::isnan(t.lo) || std::isnan(t.hi) || t.lo > t.hi)
      throw ParseError("invalid target interval", reader.line());
    out[std::string(csv::trim(row[0]))] = t;
  }
  return out;
}

void write_sequences(const std::filesystem::path& path, const Dataset& dataset) {
  auto out = open_out(path);
  out << "sequenceID,value\n";
  for (const auto& s : dataset.sequences)
    for (double v : s.values) out << s.id << ',' << format_double(v) << '\n';
}

void write_labels(const std::filesystem::path& path, const Dataset& dataset) {
  auto out = open_out(path);
  out << "sequenceID,start,end,min_changes,max_changes\n";
  for (const auto& [id, regions] : dataset.labels)
    for (const auto& l : regions)
      out << id << ',' << l.start << ',' << l.end << ',' << l.min_changes << ','
          << (l.unbounded() ? std::string("inf") : std::to_string(l.max_changes)) << '\n';
}

void write_folds(const std::filesystem::path& path, const FoldAssignment& folds) {
  auto out = open_out(path);
  out << "sequenceID,fold\n";
  for (const auto& [id, f] : folds.fold) out << id << ',' << f << '\n';
}

void write_targets(const std::filesystem::path& path,
                   const std::map<std::string, TargetInterval>& targets) {
  auto out = open_out(path);
  out << "sequenceID,min_log_lambda,max_log_lambda\n";
  for (const auto& [id, t] : targets)
    out << id << ',' << format_double(t.lo) << ',' << format_double(t.hi) << '\n';
}

FoldAssignment generate_folds(std::vector<std::string> ids, int n_folds, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (n_folds < 2) throw DataError("n_folds must be at least 2");
  if (static_cast<std::size_t>(n_folds) > ids.size())
    throw DataError("n_folds (" + std::to_string(n_folds) + ") exceeds number of sequences (" +
                    std::to_string(ids.size()) + ")");
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i-- > 1;) {
    const std::size_t j = rng() % (i + 1);
    std::swap(ids[i], ids[j]);
  }
  FoldAssignment fa;
  fa.n_folds = n_folds;
  for (std::size_t p = 0; p < ids.size(); ++p) fa.fold[ids[p]] = static_cast<int>(p % n_folds) + 1;
  return fa;
}

FoldAssignment generate_folds(const Dataset& dataset, int n_folds, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& s : dataset.sequences)
    if (dataset.labels.empty() || dataset.has_labels(s.id)) ids.push_back(s.id);
  return generate_folds(std::move(ids), n_folds, seed);
}

}  // namespace penlearn
