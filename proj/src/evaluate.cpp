// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "eyesynth/errors.hpp"
#include "eyesynth/io.hpp"
#include "eyesynth/parallel.hpp"

namespace eyesynth {

namespace fs = std::filesystem;

ClassIoU iou_per_class(const SegMask& pred, const SegMask& gt) {
    if (pred.width() != gt.width() || pred.height() != gt.height()) {
        throw InvalidParameter("mask sizes differ (" + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                               " vs " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()) + ")");
    }
    std::array<std::size_t, kClassCount> inter{}, uni{};
    for (std::size_t i = 0; i < pred.labels.data.size(); ++i) {
        const auto p = pred.labels.data[i], g = gt.labels.data[i];
        if (p >= kClassCount || g >= kClassCount) throw InvalidParameter("mask holds a code outside the class set");
        if (p == g) {
            ++inter[p];
            ++uni[p];
        } else {
            ++uni[p];
            ++uni[g];
        }
    }
    ClassIoU out;
    for (int c = 0; c < kClassCount; ++c)
        if (uni[c] > 0) out[c] = static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
    return out;
}

double mean_iou(const ClassIoU& iou, UndefinedClassPolicy policy) {
    double sum = 0.0;
    int n = 0;
    for (const auto& v : iou) {
        if (v) {
            sum += *v;
            ++n;
        } else if (policy == UndefinedClassPolicy::CountAsOne) {
            sum += 1.0;
            ++n;
        }
    }
    if (n == 0) throw InvalidParameter("no class is defined in either mask");
    return sum / n;
}

Stat summarize(std::vector<double> values) {
    Stat s;
    s.count = values.size();
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    std::vector<double> sq;
    sq.reserve(values.size());
    for (double v : values) sq.push_back((v - s.mean) * (v - s.mean));
    std::sort(sq.begin(), sq.end());
    double var = 0.0;
    for (double v : sq) var += v;
    s.std = std::sqrt(var / static_cast<double>(values.size()));
    return s;
}

IoUReport dataset_miou(const std::vector<std::pair<SegMask, SegMask>>& pairs, UndefinedClassPolicy policy) {
    if (pairs.empty()) throw InvalidParameter("dataset_miou: empty list");
    IoUReport r;
    std::array<std::vector<double>, kClassCount> per_class;
    for (const auto& [pred, gt] : pairs) {
        const ClassIoU iou = iou_per_class(pred, gt);
        r.per_image_miou.push_back(mean_iou(iou, policy));
        for (int c = 0; c < kClassCount; ++c) {
            if (iou[c]) per_class[c].push_back(*iou[c]);
            else if (policy == UndefinedClassPolicy::CountAsOne) per_class[c].push_back(1.0);
        }
    }
    r.miou = summarize(r.per_image_miou);
    for (int c = 0; c < kClassCount; ++c) r.per_class[c] = summarize(per_class[c]);
    return r;
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
    return buf;
}

nlohmann::json IoUReport::to_json() const {
    auto stat = [](const Stat& s) {
        return nlohmann::json{{"mean", s.mean}, {"std", s.std}, {"count", s.count},
                              {"mean_percent", format_percent(s.mean)}, {"std_percent", format_percent(s.std)}};
    };
    nlohmann::json classes = nlohmann::json::object();
    for (int c = 0; c < kClassCount; ++c) classes[class_name(static_cast<SemanticClass>(c))] = stat(per_class[c]);
    return {{"miou", stat(miou)}, {"per_class", classes}, {"per_image_miou", per_image_miou}};
}

namespace {

fs::path mask_dir(const std::string& dir) {
    const fs::path p(dir);
    if (!fs::is_directory(p)) throw AssetError(dir, "not a directory");
    if (fs::is_directory(p / "masks")) return p / "masks";
    return p;
}

}  // namespace

DirectoryEvaluation evaluate_directories(const std::string& pred_dir, const std::string& gt_dir,
                                         UndefinedClassPolicy policy, int threads) {
    const fs::path pred_root = mask_dir(pred_dir), gt_root = mask_dir(gt_dir);
    DirectoryEvaluation out;
    for (const auto& entry : fs::directory_iterator(gt_root)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") out.ids.push_back(entry.path().stem().string());
    }
    std::sort(out.ids.begin(), out.ids.end());
    if (out.ids.empty()) throw InvalidParameter("no ground-truth masks in " + gt_root.string());
    for (const auto& id : out.ids) {
        const fs::path p = pred_root / (id + ".png");
        if (!fs::exists(p)) throw AssetError(p.string(), "missing prediction");
    }
    std::vector<std::pair<SegMask, SegMask>> pairs(out.ids.size());
    parallel_for(out.ids.size(), threads, [&](std::size_t i) {
        pairs[i] = {read_mask_png((pred_root / (out.ids[i] + ".png")).string()),
                    read_mask_png((gt_root / (out.ids[i] + ".png")).string())};
    });
    out.report = dataset_miou(pairs, policy);
    return out;
}

}  // namespace eyesynth
