#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alert/error.hpp"

namespace alert {

/// One classified sample tagged with its source file and ground truth.
struct PredictionRecord {
    int32_t file_id = 0;
    int32_t sample_index = 0;
    int32_t truth = 0;
    int32_t predicted = 0;
};

struct EvalReport {
    double sa = 0.0;  // per-sample accuracy
    double fva = 0.0; // per-file majority-vote accuracy
    double nva = 0.0; // sliding-window majority-vote accuracy
    uint32_t nva_window = 1;
    size_t samples = 0;
    size_t files = 0;
};

/// SA = mean per-sample correctness. FVA = per-file majority vote. NVA(n) =
/// mean correctness of majority votes over length-n sliding windows within
/// each file (one vote over the whole file when it is shorter than n).
/// Vote ties break toward the most recent prediction.
EvalReport evaluate(std::span<const PredictionRecord> records, uint32_t nva_window);

/// CSV with header "file,sample,truth,pred".
std::vector<PredictionRecord> read_predictions_csv(const std::string& path);
void write_predictions_csv(std::span<const PredictionRecord> records, const std::string& path);

} // namespace alert
