// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/calendar.hpp"
#include "geoprox/domain.hpp"
#include "geoprox/nd/tensor.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace geoprox::metrics {

/// Principal axes of row data. Columns of `components` are unit eigenvectors
/// of the population covariance, ordered by decreasing eigenvalue.
struct Pca {
    Eigen::RowVectorXd mean;
    Eigen::MatrixXd components;
    Eigen::VectorXd eigenvalues;
    std::optional<Eigen::VectorXd> explained;  // absent for zero total variance

    [[nodiscard]] Eigen::MatrixXd scores(const nd::Matrix& rows) const;
    [[nodiscard]] nd::Matrix reconstruct(const Eigen::MatrixXd& scores) const;
};

/// Power iteration with deflation and re-orthogonalization.
[[nodiscard]] Pca fit_pca(const nd::Matrix& rows, double tol = 1e-10, int max_iter = 20000);

struct EmbeddingGrid {
    double lon0 = 0.0;
    double lat0 = 0.0;
    double spacing = 0.25;
    int nx = 0;
    int ny = 0;

    [[nodiscard]] double lon(int ix) const { return lon0 + (ix + 0.5) * spacing; }
    [[nodiscard]] double lat(int iy) const { return lat0 + (iy + 0.5) * spacing; }
    [[nodiscard]] std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }
};

/// Cell-centered grid covering the box at the given spacing.
[[nodiscard]] EmbeddingGrid make_embedding_grid(const DomainBox& box, double spacing);

using EmbeddingFn = std::function<nd::Matrix(std::span<const SpaceTime>)>;

struct EmbeddingGridExport {
    EmbeddingGrid grid;
    std::vector<Date> times;
    nd::Matrix embeddings;  // row (t * cells + iy * nx + ix)
    Pca pca;
    Eigen::MatrixXd scores;
    double smoothness = 0.0;
};

/// Mean |pc1 difference| over 4-neighbour cell pairs within each time slice,
/// divided by the standard deviation of pc1 over all rows; 0 for constant pc1.
[[nodiscard]] double first_pc_roughness(const EmbeddingGrid& grid, std::size_t time_count,
                                        const Eigen::VectorXd& pc1);

[[nodiscard]] EmbeddingGridExport export_embedding_grid(const EmbeddingFn& embed, const DomainBox& box,
                                                        double spacing, std::span<const Date> times);

/// embeddings.csv, pca_components.csv, pca_maps.csv and pca_timeseries.csv
/// (per-time mean/min/max of the leading `components` scores).
void write_embedding_export(const std::filesystem::path& dir, const EmbeddingGridExport& ex, int components = 3);

} // namespace geoprox::metrics
