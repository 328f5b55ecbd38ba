#pragma once

#include <span>
#include <vector>

#include "penlearn/data_model.hpp"

namespace penlearn {

// One outcome per label: fp when more changepoints than max_changes fall
// inside, fn when fewer than min_changes, otherwise tp (positive label) or
// tn (negative label).
ErrorCount count_errors(std::span<const std::size_t> changepoints,
                        std::span<const LabelRegion> labels);

// (tp + tn) / total over the componentwise sum.
double accuracy(std::span<const ErrorCount> counts);
double accuracy(const ErrorCount& total);

}  // namespace penlearn
