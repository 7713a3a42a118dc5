// SPDX-License-Identifier: Apache-2.0
#include "geoprox/metrics/pca.hpp"

#include "geoprox/errors.hpp"
#include "geoprox/io/keyvalue.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace geoprox::metrics {
namespace {

void orthogonalize(Eigen::VectorXd& v, const Eigen::MatrixXd& basis, Eigen::Index count)
{
    for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index j = 0; j < count; ++j) {
            v -= basis.col(j).dot(v) * basis.col(j);
        }
    }
}

// A unit vector orthogonal to the first `count` columns; standard basis
// vectors are tried in turn.
Eigen::VectorXd complement_vector(const Eigen::MatrixXd& basis, Eigen::Index count)
{
    const auto d = basis.rows();
    Eigen::VectorXd best;
    double best_norm = -1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::VectorXd v = Eigen::VectorXd::Unit(d, i);
        orthogonalize(v, basis, count);
        if (v.norm() > best_norm) {
            best_norm = v.norm();
            best = v;
        }
    }
    return best / best_norm;
}

std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream os(p, std::ios::trunc);
    if (!os) {
        throw DataError("cannot open " + p.string() + " for writing");
    }
    return os;
}

} // namespace

Eigen::MatrixXd Pca::scores(const nd::Matrix& rows) const
{
    return (rows.rowwise() - mean) * components;
}

nd::Matrix Pca::reconstruct(const Eigen::MatrixXd& s) const
{
    nd::Matrix out = s * components.transpose();
    return out.rowwise() + mean;
}

Pca fit_pca(const nd::Matrix& rows, double tol, int max_iter)
{
    if (rows.rows() == 0 || rows.cols() == 0) {
        throw DataError("pca: empty input");
    }
    const auto d = rows.cols();
    Pca p;
    p.mean = rows.colwise().mean();
    const Eigen::MatrixXd centered = rows.rowwise() - p.mean;
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(rows.rows());
    const double total = cov.trace();
    const double floor = std::max(total, 1e-300) * 1e-14;

    p.components = Eigen::MatrixXd::Zero(d, d);
    p.eigenvalues = Eigen::VectorXd::Zero(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(d, 1.0, 2.0);
        v(k) += 1.0;
        orthogonalize(v, p.components, k);
        double lambda = 0.0;
        bool degenerate = v.norm() == 0.0;
        if (!degenerate) {
            v.normalize();
            for (int it = 0; it < max_iter; ++it) {
                Eigen::VectorXd w = cov * v;
                orthogonalize(w, p.components, k);
                const double norm = w.norm();
                if (norm <= floor) {
                    degenerate = true;
                    break;
                }
                w /= norm;
                const double change = std::min((w - v).norm(), (w + v).norm());
                v = w;
                lambda = norm;
                if (change < tol) {
                    break;
                }
            }
        }
        if (degenerate) {
            v = complement_vector(p.components, k);
            lambda = 0.0;
        } else {
            lambda = v.dot(cov * v);
        }
        // Deterministic sign: largest-magnitude loading positive.
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) {
            v = -v;
        }
        p.components.col(k) = v;
        p.eigenvalues(k) = std::max(lambda, 0.0);
        cov -= lambda * v * v.transpose();
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return p.eigenvalues(a) > p.eigenvalues(b); });
    Eigen::MatrixXd comps(d, d);
    Eigen::VectorXd vals(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        comps.col(i) = p.components.col(order[static_cast<std::size_t>(i)]);
        vals(i) = p.eigenvalues(order[static_cast<std::size_t>(i)]);
    }
    p.components = comps;
    p.eigenvalues = vals;
    if (total > 0.0) {
        p.explained = vals / total;
    }
    return p;
}

EmbeddingGrid make_embedding_grid(const DomainBox& box, double spacing)
{
    if (!(spacing > 0.0) || !(box.width() > 0.0) || !(box.height() > 0.0)) {
        throw ConfigError("embedding grid: spacing and box must be positive");
    }
    EmbeddingGrid g;
    g.lon0 = box.lon_min;
    g.lat0 = box.lat_min;
    g.spacing = spacing;
    g.nx = static_cast<int>(std::llround(std::floor(box.width() / spacing + 1e-9)));
    g.ny = static_cast<int>(std::llround(std::floor(box.height() / spacing + 1e-9)));
    if (g.nx <= 0 || g.ny <= 0) {
        throw ConfigError("embedding grid: spacing larger than the box");
    }
    return g;
}

double first_pc_roughness(const EmbeddingGrid& grid, std::size_t time_count, const Eigen::VectorXd& pc1)
{
    const auto cells = grid.cells();
    if (static_cast<std::size_t>(pc1.size()) != cells * time_count) {
        throw DimensionError("roughness: score count does not match grid");
    }
    const double mean = pc1.mean();
    const double sd = std::sqrt((pc1.array() - mean).square().mean());
    if (!(sd > 0.0)) {
        return 0.0;
    }
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t t = 0; t < time_count; ++t) {
        const auto base = static_cast<Eigen::Index>(t * cells);
        for (int iy = 0; iy < grid.ny; ++iy) {
            for (int ix = 0; ix < grid.nx; ++ix) {
                const auto i = base + iy * grid.nx + ix;
                if (ix + 1 < grid.nx) {
                    sum += std::abs(pc1(i + 1) - pc1(i));
                    ++pairs;
                }
                if (iy + 1 < grid.ny) {
                    sum += std::abs(pc1(i + grid.nx) - pc1(i));
                    ++pairs;
                }
            }
        }
    }
    return pairs ? sum / static_cast<double>(pairs) / sd : 0.0;
}

EmbeddingGridExport export_embedding_grid(const EmbeddingFn& embed, const DomainBox& box, double spacing,
                                          std::span<const Date> times)
{
    if (times.empty()) {
        throw ConfigError("embedding export: no time points");
    }
    EmbeddingGridExport ex;
    ex.grid = make_embedding_grid(box, spacing);
    ex.times.assign(times.begin(), times.end());
    const auto cells = ex.grid.cells();
    std::vector<SpaceTime> pts;
    pts.reserve(cells);
    for (std::size_t t = 0; t < times.size(); ++t) {
        pts.clear();
        for (int iy = 0; iy < ex.grid.ny; ++iy) {
            for (int ix = 0; ix < ex.grid.nx; ++ix) {
                pts.push_back({ex.grid.lon(ix), ex.grid.lat(iy), times[t].days()});
            }
        }
        const nd::Matrix e = embed(pts);
        if (t == 0) {
            ex.embeddings.resize(static_cast<Eigen::Index>(cells * times.size()), e.cols());
        }
        ex.embeddings.middleRows(static_cast<Eigen::Index>(t * cells), static_cast<Eigen::Index>(cells)) = e;
    }
    ex.pca = fit_pca(ex.embeddings);
    ex.scores = ex.pca.scores(ex.embeddings);
    ex.smoothness = first_pc_roughness(ex.grid, times.size(), ex.scores.col(0));
    return ex;
}

void write_embedding_export(const std::filesystem::path& dir, const EmbeddingGridExport& ex, int components)
{
    std::filesystem::create_directories(dir);
    const auto cells = static_cast<Eigen::Index>(ex.grid.cells());
    const auto d = ex.embeddings.cols();
    const int k = std::min<int>(components, static_cast<int>(d));
    {
        auto os = open_out(dir / "embeddings.csv");
        os << "date,lon,lat";
        for (Eigen::Index j = 0; j < d; ++j) {
            os << ",e" << j + 1;
        }
        os << '\n';
        for (std::size_t t = 0; t < ex.times.size(); ++t) {
            for (Eigen::Index c = 0; c < cells; ++c) {
                const auto row = static_cast<Eigen::Index>(t) * cells + c;
                os << ex.times[t].str() << ',' << io::format_double(ex.grid.lon(static_cast<int>(c % ex.grid.nx)))
                   << ',' << io::format_double(ex.grid.lat(static_cast<int>(c / ex.grid.nx)));
                for (Eigen::Index j = 0; j < d; ++j) {
                    os << ',' << io::format_double(ex.embeddings(row, j));
                }
                os << '\n';
            }
        }
    }
    {
        auto os = open_out(dir / "pca_components.csv");
        os << "component,eigenvalue,explained_ratio";
        for (Eigen::Index j = 0; j < d; ++j) {
            os << ",w" << j + 1;
        }
        os << '\n';
        for (Eigen::Index c = 0; c < d; ++c) {
            os << c + 1 << ',' << io::format_double(ex.pca.eigenvalues(c)) << ','
               << (ex.pca.explained ? io::format_double((*ex.pca.explained)(c)) : std::string("NA"));
            for (Eigen::Index j = 0; j < d; ++j) {
                os << ',' << io::format_double(ex.pca.components(j, c));
            }
            os << '\n';
        }
    }
    {
        auto os = open_out(dir / "pca_maps.csv");
        os << "date,lon,lat";
        for (int c = 0; c < k; ++c) {
            os << ",pc" << c + 1;
        }
        os << '\n';
        for (std::size_t t = 0; t < ex.times.size(); ++t) {
            for (Eigen::Index cell = 0; cell < cells; ++cell) {
                const auto row = static_cast<Eigen::Index>(t) * cells + cell;
                os << ex.times[t].str() << ','
                   << io::format_double(ex.grid.lon(static_cast<int>(cell % ex.grid.nx))) << ','
                   << io::format_double(ex.grid.lat(static_cast<int>(cell / ex.grid.nx)));
                for (int c = 0; c < k; ++c) {
                    os << ',' << io::format_double(ex.scores(row, c));
                }
                os << '\n';
            }
        }
    }
    {
        auto os = open_out(dir / "pca_timeseries.csv");
        os << "date";
        for (int c = 0; c < k; ++c) {
            os << ",pc" << c + 1 << "_mean,pc" << c + 1 << "_min,pc" << c + 1 << "_max";
        }
        os << '\n';
        for (std::size_t t = 0; t < ex.times.size(); ++t) {
            os << ex.times[t].str();
            const auto block = ex.scores.middleRows(static_cast<Eigen::Index>(t) * cells, cells);
            for (int c = 0; c < k; ++c) {
                os << ',' << io::format_double(block.col(c).mean()) << ','
                   << io::format_double(block.col(c).minCoeff()) << ',' << io::format_double(block.col(c).maxCoeff());
            }
            os << '\n';
        }
    }
    auto os = open_out(dir / "smoothness.txt");
    os << "first_pc_roughness = " << io::format_double(ex.smoothness) << '\n';
}

} // namespace geoprox::metrics
