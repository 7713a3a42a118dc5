// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/calendar.hpp"
#include "geoprox/nd/tensor.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace geoprox::geo {

/// Precomputed location embeddings keyed by coordinates, standing in for a
/// pretrained general-purpose location encoder. Lookups never produce
/// gradient.
///
/// File format (whitespace separated text):
///
///     n d2 tolerance
///     lon lat e_1 ... e_d2      (n rows)
class FrozenEmbeddingTable {
public:
    FrozenEmbeddingTable() = default;
    FrozenEmbeddingTable(std::vector<double> lon, std::vector<double> lat, nd::Matrix embeddings, double tolerance);

    [[nodiscard]] static FrozenEmbeddingTable load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    /// Index of the stored coordinate nearest to (lon, lat); DataError if it
    /// lies farther than the tolerance (Euclidean, degrees).
    [[nodiscard]] std::size_t find(double lon, double lat) const;

    /// Stacked embedding rows for the given points (time is ignored).
    [[nodiscard]] nd::Matrix lookup(std::span<const SpaceTime> points) const;

    [[nodiscard]] std::size_t size() const noexcept { return lon_.size(); }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(embeddings_.cols()); }
    [[nodiscard]] double tolerance() const noexcept { return tolerance_; }
    [[nodiscard]] const nd::Matrix& embeddings() const noexcept { return embeddings_; }
    [[nodiscard]] const std::vector<double>& lons() const noexcept { return lon_; }
    [[nodiscard]] const std::vector<double>& lats() const noexcept { return lat_; }

    [[nodiscard]] bool bit_identical(const FrozenEmbeddingTable& other) const noexcept;

private:
    std::vector<double> lon_;
    std::vector<double> lat_;
    nd::Matrix embeddings_;
    double tolerance_ = 1e-6;
};

} // namespace geoprox::geo
