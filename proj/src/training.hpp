#pragma once

// Shared gradient-descent loop for the MLP and recurrent learners.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "penlearn/learners.hpp"

namespace penlearn::detail {

// Shuffles 0..n-1 with the same Fisher-Yates rule as fold generation.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

struct ValidationSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Holds out round(fraction * n) instances; when that leaves either side
// empty the training instances double as the validation set.
ValidationSplit split_validation(std::size_t n, double fraction, std::uint64_t seed);

struct Objective {
  // Adds d loss_i / d params to grad and returns loss_i.
  std::function<double(std::size_t i, std::span<double> grad)> loss_grad;
  std::function<double(std::size_t i)> loss;
  // Points contributed by instance i (batch policy).
  std::function<std::size_t(std::size_t i)> points;
};

// Adaptive-moment descent on the mean training loss. `params` is updated in
// place and ends holding the best-validation parameters.
TrainMeta adam_train(std::vector<double>& params, const Objective& objective, std::size_t instances,
                     const TrainConfig& cfg);

}  // namespace penlearn::detail
