// SPDX-License-Identifier: Apache-2.0
#include "geoprox/geo/frozen_table.hpp"

#include "geoprox/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace geoprox::geo {

FrozenEmbeddingTable::FrozenEmbeddingTable(std::vector<double> lon, std::vector<double> lat, nd::Matrix embeddings,
                                           double tolerance)
    : lon_(std::move(lon)), lat_(std::move(lat)), embeddings_(std::move(embeddings)), tolerance_(tolerance)
{
    if (lon_.size() != lat_.size() || static_cast<Eigen::Index>(lon_.size()) != embeddings_.rows()) {
        throw DataError("frozen table: coordinate and embedding counts differ");
    }
    if (!(tolerance_ >= 0.0)) {
        throw DataError("frozen table: tolerance must be non-negative");
    }
}

FrozenEmbeddingTable FrozenEmbeddingTable::load(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw DataError("frozen table: cannot open " + path.string());
    }
    long long n = 0;
    long long d = 0;
    double tol = 0.0;
    if (!(is >> n >> d >> tol) || n < 0 || d <= 0) {
        throw DataError("frozen table " + path.string() + ": bad header (expected 'n d2 tolerance')");
    }
    std::vector<double> lon(static_cast<std::size_t>(n));
    std::vector<double> lat(static_cast<std::size_t>(n));
    nd::Matrix emb(n, d);
    for (long long i = 0; i < n; ++i) {
        if (!(is >> lon[i] >> lat[i])) {
            throw DataError("frozen table " + path.string() + ": row " + std::to_string(i + 1) + " truncated");
        }
        for (long long j = 0; j < d; ++j) {
            if (!(is >> emb(i, j))) {
                throw DataError("frozen table " + path.string() + ": row " + std::to_string(i + 1) + " truncated");
            }
        }
    }
    if (!emb.allFinite()) {
        throw DataError("frozen table " + path.string() + ": non-finite embedding values");
    }
    return FrozenEmbeddingTable(std::move(lon), std::move(lat), std::move(emb), tol);
}

void FrozenEmbeddingTable::save(const std::filesystem::path& path) const
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw DataError("frozen table: cannot open " + path.string() + " for writing");
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", tolerance_);
    os << size() << ' ' << dim() << ' ' << buf << '\n';
    for (std::size_t i = 0; i < size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", lon_[i]);
        os << buf;
        std::snprintf(buf, sizeof buf, "%.17g", lat_[i]);
        os << ' ' << buf;
        for (Eigen::Index j = 0; j < embeddings_.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", embeddings_(static_cast<Eigen::Index>(i), j));
            os << ' ' << buf;
        }
        os << '\n';
    }
}

std::size_t FrozenEmbeddingTable::find(double lon, double lat) const
{
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lon_.size(); ++i) {
        const double dx = lon_[i] - lon;
        const double dy = lat_[i] - lat;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    if (!(std::sqrt(best_d2) <= tolerance_)) {
        std::ostringstream os;
        os << "frozen table: no stored coordinate within " << tolerance_ << " deg of (" << lon << ", " << lat << ")";
        throw DataError(os.str());
    }
    return best;
}

nd::Matrix FrozenEmbeddingTable::lookup(std::span<const SpaceTime> points) const
{
    nd::Matrix out(static_cast<Eigen::Index>(points.size()), embeddings_.cols());
    for (std::size_t i = 0; i < points.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = embeddings_.row(static_cast<Eigen::Index>(find(points[i].lon, points[i].lat)));
    }
    return out;
}

bool FrozenEmbeddingTable::bit_identical(const FrozenEmbeddingTable& other) const noexcept
{
    auto same = [](const double* a, const double* b, std::size_t n) { return std::memcmp(a, b, n * sizeof(double)) == 0; };
    return size() == other.size() && embeddings_.cols() == other.embeddings_.cols() &&
           std::memcmp(&tolerance_, &other.tolerance_, sizeof(double)) == 0 &&
           same(lon_.data(), other.lon_.data(), size()) && same(lat_.data(), other.lat_.data(), size()) &&
           same(embeddings_.data(), other.embeddings_.data(), static_cast<std::size_t>(embeddings_.size()));
}

} // namespace geoprox::geo
