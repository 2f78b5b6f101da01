// SPDX-License-Identifier: Apache-2.0
//
// Segmentation metrics: per-class IoU, per-image mIoU and dataset aggregates.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "eyesynth/segmask.hpp"

namespace eyesynth {

/// How a class absent from both masks enters the mean.
enum class UndefinedClassPolicy { Exclude, CountAsOne };

using ClassIoU = std::array<std::optional<double>, kClassCount>;

/// |pred=c and gt=c| / |pred=c or gt=c|; empty when the union is empty.
/// Throws InvalidParameter on a resolution mismatch.
ClassIoU iou_per_class(const SegMask& pred, const SegMask& gt);

/// Mean over defined classes (or all classes, undefined ones scoring 1).
double mean_iou(const ClassIoU& iou, UndefinedClassPolicy policy = UndefinedClassPolicy::Exclude);

struct Stat {
    double mean = 0.0;
    double std = 0.0;  // population
    std::size_t count = 0;
};

struct IoUReport {
    std::vector<double> per_image_miou;  // input order
    Stat miou;
    std::array<Stat, kClassCount> per_class;  // over images where the class is defined

    nlohmann::json to_json() const;
};

/// Throws InvalidParameter on an empty list.
IoUReport dataset_miou(const std::vector<std::pair<SegMask, SegMask>>& pairs,
                       UndefinedClassPolicy policy = UndefinedClassPolicy::Exclude);

/// Mean and population standard deviation, independent of input order.
Stat summarize(std::vector<double> values);

struct DirectoryEvaluation {
    std::vector<std::string> ids;
    IoUReport report;
};

/// Pairs every PNG in `gt_dir` with the same file name in `pred_dir`. A
/// directory holding a masks/ subdirectory is treated as a dataset root.
DirectoryEvaluation evaluate_directories(const std::string& pred_dir, const std::string& gt_dir,
                                         UndefinedClassPolicy policy = UndefinedClassPolicy::Exclude, int threads = 1);

/// Percentage with two decimals, e.g. 0.58333 -> "58.33".
std::string format_percent(double fraction);

}  // namespace eyesynth
