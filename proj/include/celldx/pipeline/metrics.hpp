#pragma once

#include <string>
#include <vector>

#include "celldx/io/csv.hpp"

namespace celldx {

inline constexpr const char* kMetricsHeader = "stage,trial,metric,value";

// Flat metric log shared by training and evaluation commands. Trial 0 holds
// single-run and aggregate values; trials 1..n hold per-trial repeats.
struct MetricsTable {
    struct Row {
        std::string stage;
        int trial = 0;
        std::string metric;
        double value = 0.0;
    };
    std::vector<Row> rows;

    void add(const std::string& stage, int trial, const std::string& metric, double value) {
        rows.push_back({stage, trial, metric, value});
    }

    void write(const std::string& path) const {
        CsvWriter w(path, kMetricsHeader);
        for (const auto& r : rows)
            w.raw(r.stage + "," + std::to_string(r.trial) + "," + r.metric + "," +
                  format_double(r.value));
    }
};

} // namespace celldx
