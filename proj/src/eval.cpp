#include "alert/eval.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>

namespace alert {

namespace {

// Majority over a window of predictions; ties break toward the class whose
// vote arrived most recently.
int32_t vote(std::span<const int32_t> window) {
    std::map<int32_t, size_t> counts;   // class -> votes
    std::map<int32_t, size_t> last_pos; // class -> latest index
    for (size_t i = 0; i < window.size(); ++i) {
        ++counts[window[i]];
        last_pos[window[i]] = i;
    }
    int32_t best = window.front();
    size_t best_votes = 0;
    size_t best_last = 0;
    for (const auto& [cls, votes] : counts) {
        const size_t last = last_pos[cls];
        if (votes > best_votes || (votes == best_votes && last > best_last)) {
            best = cls;
            best_votes = votes;
            best_last = last;
        }
    }
    return best;
}

} // namespace

EvalReport evaluate(std::span<const PredictionRecord> records, uint32_t nva_window) {
    if (records.empty())
        throw ValidationError("cannot evaluate an empty prediction set");
    if (nva_window == 0)
        throw ConfigError("nva window must be >= 1");

    EvalReport report;
    report.nva_window = nva_window;
    report.samples = records.size();

    size_t correct = 0;
    for (const PredictionRecord& r : records)
        if (r.predicted == r.truth)
            ++correct;
    report.sa = double(correct) / double(records.size());

    // Group by file, preserving sample order within each file.
    std::map<int32_t, std::vector<PredictionRecord>> files;
    for (const PredictionRecord& r : records)
        files[r.file_id].push_back(r);
    for (auto& [id, preds] : files) {
        std::stable_sort(preds.begin(), preds.end(),
                         [](const PredictionRecord& a, const PredictionRecord& b) {
                             return a.sample_index < b.sample_index;
                         });
        for (const PredictionRecord& r : preds)
            if (r.truth != preds.front().truth)
                throw ValidationError("file " + std::to_string(id) +
                                      " has inconsistent ground truth");
    }
    report.files = files.size();

    size_t files_correct = 0;
    size_t windows = 0;
    size_t windows_correct = 0;
    for (const auto& [id, preds] : files) {
        std::vector<int32_t> classes;
        classes.reserve(preds.size());
        for (const PredictionRecord& r : preds)
            classes.push_back(r.predicted);
        const int32_t truth = preds.front().truth;

        if (vote(classes) == truth)
            ++files_correct;

        if (classes.size() < nva_window) {
            ++windows;
            if (vote(classes) == truth)
                ++windows_correct;
        } else {
            for (size_t begin = 0; begin + nva_window <= classes.size(); ++begin) {
                ++windows;
                if (vote({classes.data() + begin, nva_window}) == truth)
                    ++windows_correct;
            }
        }
    }
    report.fva = double(files_correct) / double(files.size());
    report.nva = double(windows_correct) / double(windows);
    return report;
}

std::vector<PredictionRecord> read_predictions_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open predictions file: " + path);
    std::vector<PredictionRecord> records;
    std::string line;
    size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        if (!header_seen) {
            if (line != "file,sample,truth,pred")
                throw FormatError(path + ":" + std::to_string(line_no) +
                                  ": expected header \"file,sample,truth,pred\"");
            header_seen = true;
            continue;
        }
        PredictionRecord rec;
        const char* ptr = line.data();
        const char* end = line.data() + line.size();
        for (int32_t* field : {&rec.file_id, &rec.sample_index, &rec.truth, &rec.predicted}) {
            if (field != &rec.file_id) {
                if (ptr == end || *ptr != ',')
                    throw FormatError(path + ":" + std::to_string(line_no) + ": malformed row");
                ++ptr;
            }
            const auto [next, ec] = std::from_chars(ptr, end, *field);
            if (ec != std::errc{})
                throw FormatError(path + ":" + std::to_string(line_no) + ": malformed row");
            ptr = next;
        }
        if (ptr != end)
            throw FormatError(path + ":" + std::to_string(line_no) + ": trailing characters");
        records.push_back(rec);
    }
    return records;
}

void write_predictions_csv(std::span<const PredictionRecord> records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open file for writing: " + path);
    out << "file,sample,truth,pred\n";
    for (const PredictionRecord& r : records)
        out << r.file_id << ',' << r.sample_index << ',' << r.truth << ',' << r.predicted << '\n';
    if (!out)
        throw IoError("short write: " + path);
}

} // namespace alert
