// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/fusion/trainer.hpp"
#include "geoprox/geo/frozen_table.hpp"
#include "geoprox/io/keyvalue.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace geoprox::fusion {

struct SplitSpec {
    std::string protocol = "uar";  // uar | checkerboard | file
    double fraction = 0.5;
    double delta = 2.0;
    splits::Offset offset = splits::Offset::original;
    bool swap = false;
    double validation_share = 0.1;
    std::optional<double> lon0;  // checkerboard origin; defaults to the field's lower-left corner
    std::optional<double> lat0;
    std::string file;
};

/// Everything needed to reproduce a run. Serialized as sectioned key=value
/// text; unknown keys are rejected.
struct ExperimentConfig {
    ModelConfig model;  // feature_dim and proxy_channels are filled from the data
    TrainConfig train;
    SplitSpec split;
    std::uint64_t seed = 1;
    std::string points;
    std::string field;
    std::string table;
    std::string output;

    void validate() const;
    [[nodiscard]] std::string to_text() const;
    [[nodiscard]] std::uint64_t hash() const;
    [[nodiscard]] static ExperimentConfig from_doc(const io::KeyValueDoc& doc);
    [[nodiscard]] static ExperimentConfig load(const std::filesystem::path& path);
};

[[nodiscard]] splits::SplitAssignment make_split(const SplitSpec& spec, const io::Dataset& data,
                                                 const DomainBox& box, std::uint64_t seed);

[[nodiscard]] ModelConfig resolve_model_config(const ExperimentConfig& cfg, const io::Dataset& data,
                                               const io::ProxyField& field);

struct ExperimentRun {
    std::unique_ptr<FusionModel> model;
    PreparedData data;
    splits::SplitAssignment split;
    TrainResult train;
    metrics::MetricReport test;
    std::optional<metrics::MetricReport> train_metrics;
};

/// Builds the model from the "init" seed stream, trains it and evaluates it
/// on the test role. The frozen-LE regime needs `table` or `cfg.table`.
[[nodiscard]] ExperimentRun run_experiment(const ExperimentConfig& cfg, const io::Dataset& data,
                                           const io::ProxyField& field, const splits::SplitAssignment& split,
                                           std::ostream* log = nullptr,
                                           std::shared_ptr<const geo::FrozenEmbeddingTable> table = nullptr);

/// Site embeddings of a trained encoder, evaluated at the middle day of
/// `span`, for use as a frozen table.
[[nodiscard]] geo::FrozenEmbeddingTable export_site_table(const FusionModel& model, const io::SiteTable& sites,
                                                          const TimeSpan& span, double tolerance = 1e-6);

/// Model, configuration and normalization restored from a checkpoint.
struct LoadedModel {
    ExperimentConfig config;
    std::unique_ptr<FusionModel> model;
    io::NormalizationStats stats;
    DomainBox box;
    TimeSpan span;
};

/// Stores every parameter group plus the buffers needed to rebuild the model:
/// domain, normalization and the fixed RFF frequencies.
void save_model_checkpoint(const std::filesystem::path& path, const ExperimentConfig& cfg, const FusionModel& model,
                           const PreparedData& data);

/// Rebuilds the model from the stored config and seed, checks that the
/// regenerated RFF banks match the stored ones, then loads the groups.
[[nodiscard]] LoadedModel load_model_checkpoint(const std::filesystem::path& path,
                                                std::shared_ptr<const geo::FrozenEmbeddingTable> table = nullptr);

/// Prepares one split of `data` for a loaded model (normalization from the
/// checkpoint, cached encoder inputs).
[[nodiscard]] PreparedSplit prepare_for_model(const LoadedModel& loaded, const io::Dataset& data,
                                              const io::ProxyField& field, const std::vector<std::size_t>& rows);

/// Run directory: config.ini, seed.txt, split.csv, loss.log, epochs.csv,
/// metrics.csv and checkpoint.bin.
void write_run_directory(const std::filesystem::path& dir, const ExperimentConfig& cfg, const ExperimentRun& run,
                         const std::string& loss_log);

} // namespace geoprox::fusion
