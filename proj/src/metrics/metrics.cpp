// SPDX-License-Identifier: Apache-2.0
#include "geoprox/metrics/metrics.hpp"

#include "geoprox/errors.hpp"
#include "geoprox/io/keyvalue.hpp"

#include <cmath>
#include <fstream>

namespace geoprox::metrics {

MetricReport compute_metrics(std::span<const double> yhat, std::span<const double> y)
{
    if (yhat.size() != y.size()) {
        throw DimensionError("metrics: " + std::to_string(yhat.size()) + " predictions for " +
                             std::to_string(y.size()) + " targets");
    }
    if (y.size() < 2) {
        throw DataError("metrics: need at least 2 points");
    }
    const auto n = static_cast<double>(y.size());
    double ybar = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i]) || !std::isfinite(yhat[i])) {
            throw NumericalError("metrics: non-finite value at index " + std::to_string(i));
        }
        ybar += y[i];
    }
    ybar /= n;

    double sse = 0.0;
    double sst = 0.0;
    double sae = 0.0;
    double sbe = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = yhat[i] - y[i];
        sse += e * e;
        sae += std::abs(e);
        sbe += e;
        sst += (y[i] - ybar) * (y[i] - ybar);
    }
    MetricReport r;
    r.n = y.size();
    r.rmse = std::sqrt(sse / n);
    r.mae = sae / n;
    r.mbe = sbe / n;
    if (sst > 0.0) {
        r.r2 = 1.0 - sse / sst;
    } else {
        r.r2_note = "constant target";
    }
    return r;
}

Summary summarize(std::span<const double> values)
{
    Summary s;
    s.n = values.size();
    if (values.empty()) {
        return s;
    }
    for (double v : values) {
        s.mean += v;
    }
    s.mean /= static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        s.se = sd / std::sqrt(static_cast<double>(values.size()));
    }
    return s;
}

AggregateReport aggregate(std::span<const MetricReport> reports, std::vector<std::string> labels)
{
    if (reports.empty()) {
        throw DataError("aggregate: no reports");
    }
    std::vector<double> r2, rmse, mae, mbe;
    for (const auto& r : reports) {
        if (r.r2) {
            r2.push_back(*r.r2);
        }
        rmse.push_back(r.rmse);
        mae.push_back(r.mae);
        mbe.push_back(r.mbe);
    }
    AggregateReport a;
    a.labels = std::move(labels);
    a.runs = reports.size();
    a.r2 = summarize(r2);
    a.rmse = summarize(rmse);
    a.mae = summarize(mae);
    a.mbe = summarize(mbe);
    return a;
}

std::string format_optional(const std::optional<double>& v)
{
    return v ? io::format_double(*v) : std::string("NA");
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricReport> reports)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    os << "R2,RMSE,MAE,MBE,n\n";
    for (const auto& r : reports) {
        os << format_optional(r.r2) << ',' << io::format_double(r.rmse) << ',' << io::format_double(r.mae) << ','
           << io::format_double(r.mbe) << ',' << r.n << '\n';
    }
}

void write_aggregate_csv(const std::filesystem::path& path, std::span<const AggregateRow> rows)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    os << "cell,runs,R2_mean,R2_se,RMSE_mean,RMSE_se,MAE_mean,MAE_se,MBE_mean,MBE_se\n";
    const auto put = [&os](const Summary& s) {
        os << ',' << (s.n ? io::format_double(s.mean) : std::string("NA")) << ',' << format_optional(s.se);
    };
    for (const auto& row : rows) {
        os << row.cell << ',' << row.report.runs;
        put(row.report.r2);
        put(row.report.rmse);
        put(row.report.mae);
        put(row.report.mbe);
        os << '\n';
    }
}

} // namespace geoprox::metrics
