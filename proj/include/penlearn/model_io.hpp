#pragma once

#include <filesystem>
#include <string>

#include "penlearn/learners.hpp"

namespace penlearn {

// Model documents are JSON objects
//   {"format_version": 1, "kind": ..., "arch": {...}, "params": {...},
//    "preprocessing_stats": {...}, "train_meta": {...}}
// Doubles are written with round-trip precision, so save/load is exact.
constexpr int kModelFormatVersion = 1;

std::string model_to_json(const LearnerModel& model);
LearnerModel model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const LearnerModel& model);
LearnerModel load_model(const std::filesystem::path& path);

}  // namespace penlearn
