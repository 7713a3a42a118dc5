// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace geoprox::metrics {

struct MetricReport {
    std::optional<double> r2;  // absent when y is constant
    std::string r2_note;
    double rmse = 0.0;
    double mae = 0.0;
    double mbe = 0.0;
    std::size_t n = 0;
};

/// R2 = 1 - SSE/SST, RMSE, MAE and MBE = mean(yhat - y).
[[nodiscard]] MetricReport compute_metrics(std::span<const double> yhat, std::span<const double> y);

/// Mean and standard error (sample sd / sqrt(n)); se is absent for n < 2.
struct Summary {
    double mean = 0.0;
    std::optional<double> se;
    std::size_t n = 0;
};

[[nodiscard]] Summary summarize(std::span<const double> values);

struct AggregateReport {
    std::vector<std::string> labels;
    Summary r2;  // over runs with a defined R2
    Summary rmse;
    Summary mae;
    Summary mbe;
    std::size_t runs = 0;
};

[[nodiscard]] AggregateReport aggregate(std::span<const MetricReport> reports, std::vector<std::string> labels = {});

/// `R2,RMSE,MAE,MBE,n`, one row per report; undefined R2 is written as NA.
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricReport> reports);

struct AggregateRow {
    std::string cell;  // free-form label of the sweep cell
    AggregateReport report;
};

/// `cell,runs,R2_mean,R2_se,RMSE_mean,RMSE_se,MAE_mean,MAE_se,MBE_mean,MBE_se`.
void write_aggregate_csv(const std::filesystem::path& path, std::span<const AggregateRow> rows);

[[nodiscard]] std::string format_optional(const std::optional<double>& v);

} // namespace geoprox::metrics
