#pragma once

#include <string>
#include <vector>

#include "noddet/data/types.hpp"
#include "noddet/eval/froc.hpp"

namespace noddet::eval {

// Writes froc.csv (threshold, avg_fp_per_scan, sensitivity), summary.json
// (sens_at_* keys plus average_froc) and froc.png into out_dir.
void emit_report(const FrocCurve& curve, const std::string& out_dir);

FrocCurve load_summary(const std::string& summary_json_path);

// Prediction rendering: ground truth blue, true positives green, false
// positives red, confidence printed at the top-left box corner. With no
// ground truth supplied every detection is drawn red.
void write_overlay(const data::SliceStack& stack, const std::vector<Detection>& dets,
                   const std::vector<Box>& gts, const std::string& path, double iou_thr = 0.5);

// Table-1 style console block: the six sensitivities (%) plus the average.
std::string format_sensitivity_table(const std::string& model_name, const FrocCurve& curve);

}  // namespace noddet::eval
