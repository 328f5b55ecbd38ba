#include "penlearn/label_eval.hpp"

#include <algorithm>
#include <stdexcept>

namespace penlearn {

ErrorCount count_errors(std::span<const std::size_t> changepoints,
                        std::span<const LabelRegion> labels) {
  if (!std::is_sorted(changepoints.begin(), changepoints.end()))
    throw std::invalid_argument("changepoints must be sorted");
  ErrorCount out;
  for (const auto& l : labels) {
    // changepoints in [start, end - 1]
    const auto lo = std::lower_bound(changepoints.begin(), changepoints.end(),
                                     static_cast<std::size_t>(l.start));
    const auto hi = std::lower_bound(lo, changepoints.end(), static_cast<std::size_t>(l.end));
    const long c = static_cast<long>(hi - lo);
    if (!l.unbounded() && c > l.max_changes)
      ++out.fp;
    else if (c < l.min_changes)
      ++out.fn;
    else if (l.positive())
      ++out.tp;
    else
      ++out.tn;
  }
  return out;
}

double accuracy(const ErrorCount& total) {
  if (total.total() == 0) throw std::invalid_argument("accuracy of zero labels is undefined");
  return static_cast<double>(total.tp + total.tn) / static_cast<double>(total.total());
}

double accuracy(std::span<const ErrorCount> counts) {
  ErrorCount sum;
  for (const auto& c : counts) sum += c;
  return accuracy(sum);
}

}  // namespace penlearn
