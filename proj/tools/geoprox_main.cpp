// SPDX-License-Identifier: Apache-2.0
#include "geoprox/errors.hpp"
#include "geoprox/fusion/experiment.hpp"
#include "geoprox/metrics/pca.hpp"
#include "geoprox/synth/world.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace geoprox;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumerical = 4 };

fs::path output_root()
{
    const char* env = std::getenv("GEOPROX_OUTPUT_ROOT");
    return env && *env ? fs::path(env) : fs::current_path();
}

fs::path resolve_output(const std::string& path)
{
    const fs::path p(path);
    return p.is_absolute() ? p : output_root() / p;
}

io::KeyValueDoc load_doc(const std::string& path, const std::vector<std::string>& overrides)
{
    auto doc = path.empty() ? io::KeyValueDoc{} : io::KeyValueDoc::load(path);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("--set expects section.key=value, got '" + kv + "'");
        }
        doc.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return doc;
}

std::string partition_name(splits::Offset o, bool swap)
{
    return "split_offset" + std::to_string(static_cast<int>(o)) + "_swap" + (swap ? "1" : "0") + ".csv";
}

std::vector<std::pair<splits::Offset, bool>> all_partitions()
{
    std::vector<std::pair<splits::Offset, bool>> out;
    for (bool swap : {false, true}) {
        for (auto o : {splits::Offset::original, splits::Offset::right, splits::Offset::up, splits::Offset::both}) {
            out.emplace_back(o, swap);
        }
    }
    return out;
}

struct LoadedData {
    io::Dataset data;
    io::ProxyField field;
};

LoadedData load_data(const fusion::ExperimentConfig& cfg)
{
    if (cfg.points.empty() || cfg.field.empty()) {
        throw ConfigError("data.points and data.field are required");
    }
    return {io::load_labeled_table(cfg.points), io::ProxyField::load(cfg.field)};
}

std::string default_run_name(const fusion::ExperimentConfig& cfg)
{
    std::string regime(fusion::to_string(cfg.model.regime));
    for (auto& ch : regime) {
        if (ch == '+') {
            ch = '_';
        }
    }
    return "runs/" + regime + "-seed" + std::to_string(cfg.seed);
}

void print_metrics(const metrics::MetricReport& m)
{
    std::cout << "R2=" << metrics::format_optional(m.r2) << " RMSE=" << m.rmse << " MAE=" << m.mae << " MBE=" << m.mbe
              << " n=" << m.n << "\n";
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    std::string config;
    std::vector<std::string> set;
    std::string out = "world";
};

int cmd_synth(const SynthArgs& a)
{
    const auto cfg = synth::WorldConfig::from_doc(load_doc(a.config, a.set));
    const auto world = synth::generate_world(cfg);
    const auto dir = resolve_output(a.out);
    synth::write_world(dir, world);
    std::cout << synth::world_report(world).to_text() << "wrote " << dir.string() << "\n";
    return kOk;
}

// ---- split ----------------------------------------------------------------

struct SplitArgs {
    std::string points;
    std::string field;
    bool uar = false;
    bool checkerboard = false;
    double fraction = 0.5;
    double delta = 2.0;
    std::string offset = "0";
    bool swap = false;
    bool all = false;
    std::uint64_t seed = 1;
    double validation = 0.1;
    std::optional<double> lon0;
    std::optional<double> lat0;
    std::string out;
};

int cmd_split(const SplitArgs& a)
{
    if (a.uar == a.checkerboard) {
        throw ConfigError("split: choose exactly one of --uar or --checkerboard");
    }
    const auto data = io::load_labeled_table(a.points);
    if (a.uar) {
        const auto split = splits::uar_site_split(data, a.fraction, a.seed, a.validation);
        const auto path = resolve_output(a.out.empty() ? "split_uar.csv" : a.out);
        if (path.has_parent_path()) {
            fs::create_directories(path.parent_path());
        }
        splits::write_split_file(path, split);
        std::cout << "wrote " << path.string() << "\n";
        return kOk;
    }
    splits::CheckerboardConfig cb;
    cb.delta = a.delta;
    if (!a.field.empty()) {
        const auto box = io::ProxyField::load(a.field).grid().extent();
        cb.lon0 = box.lon_min;
        cb.lat0 = box.lat_min;
    }
    cb.lon0 = a.lon0.value_or(cb.lon0);
    cb.lat0 = a.lat0.value_or(cb.lat0);
    std::vector<std::pair<splits::Offset, bool>> parts;
    if (a.all) {
        parts = all_partitions();
    } else {
        parts.emplace_back(splits::parse_offset(a.offset), a.swap);
    }
    const auto target = resolve_output(a.out.empty() ? "splits" : a.out);
    for (const auto& [offset, swap] : parts) {
        cb.offset = offset;
        cb.swap = swap;
        const auto split = splits::checkerboard_split(data, cb, a.seed, a.validation);
        fs::path path = target;
        if (a.all || fs::is_directory(target) || !target.has_extension()) {
            fs::create_directories(target);
            path = target / partition_name(offset, swap);
        } else if (path.has_parent_path()) {
            fs::create_directories(path.parent_path());
        }
        splits::write_split_file(path, split);
        std::cout << "wrote " << path.string() << " (test " << split.count(splits::Role::test) << ")\n";
    }
    return kOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    std::string config;
    std::string split;
    std::vector<std::string> set;
    std::string out;
};

fusion::ExperimentConfig experiment_config(const std::string& path, const std::vector<std::string>& set)
{
    return fusion::ExperimentConfig::from_doc(load_doc(path, set));
}

fusion::ExperimentRun train_one(fusion::ExperimentConfig& cfg, const LoadedData& d, const fs::path& dir)
{
    const auto split = fusion::make_split(cfg.split, d.data, d.field.grid().extent(), cfg.seed);
    cfg.output = dir.string();
    std::ostringstream log;
    log << "step, L, L_pred, L_pc, lr\n";
    auto run = fusion::run_experiment(cfg, d.data, d.field, split, &log);
    fusion::write_run_directory(dir, cfg, run, log.str());
    return run;
}

int cmd_train(const TrainArgs& a)
{
    auto cfg = experiment_config(a.config, a.set);
    if (!a.split.empty()) {
        cfg.split.protocol = "file";
        cfg.split.file = a.split;
    }
    const auto d = load_data(cfg);
    const auto dir = resolve_output(!a.out.empty() ? a.out : !cfg.output.empty() ? cfg.output : default_run_name(cfg));
    const auto run = train_one(cfg, d, dir);
    std::cout << "regime " << fusion::to_string(cfg.model.regime) << ", " << run.train.epochs.size()
              << " epochs, best epoch " << run.train.best_epoch << "\n";
    print_metrics(run.test);
    std::cout << "wrote " << dir.string() << "\n";
    return kOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint;
    std::string split;
    std::string points;
    std::string field;
    std::string role = "test";
    std::string out = "metrics.csv";
};

int cmd_eval(const EvalArgs& a)
{
    if (!fs::exists(a.checkpoint)) {
        throw DataError("checkpoint not found: " + a.checkpoint);
    }
    const auto loaded = fusion::load_model_checkpoint(a.checkpoint);
    const auto points = a.points.empty() ? loaded.config.points : a.points;
    const auto field_path = a.field.empty() ? loaded.config.field : a.field;
    const auto data = io::load_labeled_table(points);
    const auto field = io::ProxyField::load(field_path);
    const auto split = splits::align_split(splits::read_split_file(a.split), data);

    const auto evaluate = [&](splits::Role r) {
        const auto rows = split.indices(r);
        const auto prepared = fusion::prepare_for_model(loaded, data, field, rows);
        return fusion::evaluate_split(*loaded.model, prepared, loaded.stats);
    };
    const auto role = splits::parse_role(a.role);
    const auto report = evaluate(role);
    if (split.count(splits::Role::train) >= 2 && split.count(splits::Role::test) >= 2) {
        const auto train = role == splits::Role::train ? report : evaluate(splits::Role::train);
        const auto test = role == splits::Role::test ? report : evaluate(splits::Role::test);
        if (train.r2 && test.r2 && *train.r2 < *test.r2) {
            std::cerr << "warning: train R2 " << *train.r2 << " is below test R2 " << *test.r2 << "\n";
        }
    }
    const auto out = resolve_output(a.out);
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    metrics::write_metrics_csv(out, std::span<const metrics::MetricReport>(&report, 1));
    print_metrics(report);
    return kOk;
}

// ---- sweep ----------------------------------------------------------------

struct SweepArgs {
    std::string config;
    std::vector<std::string> set;
    std::vector<double> rho;
    std::vector<double> lambda;
    std::vector<double> delta;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> regimes;
    std::vector<std::string> modes;
    bool all_partitions = false;
    std::string out = "sweep";
};

struct SweepCell {
    std::string label;
    fusion::ExperimentConfig cfg;
};

std::vector<SweepCell> expand_cells(const fusion::ExperimentConfig& base, const SweepArgs& a)
{
    std::vector<SweepCell> cells{{"", base}};
    const auto axis = [&cells](const std::string& name, std::size_t n, const auto& apply,
                               const auto& render) {
        if (n == 0) {
            return;
        }
        std::vector<SweepCell> next;
        for (const auto& c : cells) {
            for (std::size_t i = 0; i < n; ++i) {
                SweepCell cell = c;
                apply(cell.cfg, i);
                cell.label += (cell.label.empty() ? "" : ";") + name + "=" + render(i);
                next.push_back(std::move(cell));
            }
        }
        cells = std::move(next);
    };
    axis("regime", a.regimes.size(), [&](auto& c, std::size_t i) { c.model.regime = fusion::parse_regime(a.regimes[i]); },
         [&](std::size_t i) { return a.regimes[i]; });
    axis("mode", a.modes.size(), [&](auto& c, std::size_t i) { c.train.mode = splits::parse_sampler_mode(a.modes[i]); },
         [&](std::size_t i) { return a.modes[i]; });
    axis("rho", a.rho.size(), [&](auto& c, std::size_t i) { c.train.rho = a.rho[i]; },
         [&](std::size_t i) { return io::format_double(a.rho[i]); });
    axis("lambda", a.lambda.size(), [&](auto& c, std::size_t i) { c.model.loss.lambda = a.lambda[i]; },
         [&](std::size_t i) { return io::format_double(a.lambda[i]); });
    axis("delta", a.delta.size(), [&](auto& c, std::size_t i) { c.split.delta = a.delta[i]; },
         [&](std::size_t i) { return io::format_double(a.delta[i]); });
    if (cells.size() == 1 && cells[0].label.empty()) {
        cells[0].label = "base";
    }
    return cells;
}

int cmd_sweep(const SweepArgs& a)
{
    const auto base = experiment_config(a.config, a.set);
    const auto d = load_data(base);
    if (a.all_partitions && base.split.protocol != "checkerboard") {
        throw ConfigError("--all-partitions needs split.protocol = checkerboard");
    }
    const auto seeds = a.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : a.seeds;
    const auto parts = a.all_partitions ? all_partitions()
                                        : std::vector<std::pair<splits::Offset, bool>>{{base.split.offset, base.split.swap}};
    const auto root = resolve_output(a.out);
    fs::create_directories(root);

    std::ofstream runs(root / "runs.csv");
    runs << "cell,seed,offset,swap,R2,RMSE,MAE,MBE,n\n";
    std::vector<metrics::AggregateRow> rows;
    const auto cells = expand_cells(base, a);
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        std::vector<metrics::MetricReport> reports;
        std::vector<std::string> labels;
        for (auto seed : seeds) {
            for (const auto& [offset, swap] : parts) {
                auto cfg = cells[ci].cfg;
                cfg.seed = seed;
                cfg.split.offset = offset;
                cfg.split.swap = swap;
                std::ostringstream name;
                name << "cell" << ci << "/seed" << seed << "_offset" << static_cast<int>(offset) << "_swap" << swap;
                const auto run = train_one(cfg, d, root / name.str());
                reports.push_back(run.test);
                labels.push_back(name.str());
                runs << '"' << cells[ci].label << "\"," << seed << ',' << static_cast<int>(offset) << ',' << swap << ','
                     << metrics::format_optional(run.test.r2) << ',' << io::format_double(run.test.rmse) << ','
                     << io::format_double(run.test.mae) << ',' << io::format_double(run.test.mbe) << ','
                     << run.test.n << '\n';
                std::cout << cells[ci].label << " " << name.str() << ": ";
                print_metrics(run.test);
            }
        }
        rows.push_back({cells[ci].label, metrics::aggregate(reports, labels)});
    }
    metrics::write_aggregate_csv(root / "aggregate.csv", rows);
    std::cout << cells.size() << " cells, " << cells.size() * seeds.size() * parts.size() << " runs; wrote "
              << (root / "aggregate.csv").string() << "\n";
    return kOk;
}

// ---- embed ----------------------------------------------------------------

struct EmbedArgs {
    std::string checkpoint;
    double spacing = 0.25;
    std::vector<std::string> times;
    int components = 3;
    std::string out = "embedding";
};

int cmd_embed(const EmbedArgs& a)
{
    if (!fs::exists(a.checkpoint)) {
        throw DataError("checkpoint not found: " + a.checkpoint);
    }
    const auto loaded = fusion::load_model_checkpoint(a.checkpoint);
    if (!loaded.model->encoder()) {
        throw UnsupportedRegimeError("no location encoder in regime " +
                                     std::string(fusion::to_string(loaded.model->regime())));
    }
    std::vector<Date> times;
    for (const auto& t : a.times) {
        times.push_back(Date::parse(t));
    }
    if (times.empty()) {
        times.push_back(Date::from_days(loaded.span.first_day + (loaded.span.last_day - loaded.span.first_day) / 2));
    }
    const auto& model = *loaded.model;
    const auto ex = metrics::export_embedding_grid(
        [&model](std::span<const SpaceTime> pts) { return model.location_embedding(pts); }, loaded.box, a.spacing,
        times);
    const auto dir = resolve_output(a.out);
    metrics::write_embedding_export(dir, ex, a.components);
    std::cout << ex.grid.nx << "x" << ex.grid.ny << " grid, " << times.size() << " times, first-PC roughness "
              << ex.smoothness << "\nwrote " << dir.string() << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"geoprox: multi-task fusion of point observations with gridded proxies"};
    app.require_subcommand(0, 1);
    bool print_defaults = false;
    app.add_flag("--print-default-config", print_defaults, "Print default experiment and world configs");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic world");
    synth->add_option("--config", synth_args.config, "World config file ([world] section)");
    synth->add_option("--set", synth_args.set, "Override: world.key=value");
    synth->add_option("--out", synth_args.out, "Output directory")->capture_default_str();

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "Write train/validation/test split files");
    split->add_option("--points", split_args.points, "Labeled points table")->required();
    split->add_option("--field", split_args.field, "Proxy field spec; its extent anchors the checkerboard");
    auto* uar = split->add_flag("--uar", split_args.uar, "Uniform-at-random site split");
    auto* cb = split->add_flag("--checkerboard", split_args.checkerboard, "Checkerboard split");
    uar->excludes(cb);
    split->add_option("--fraction", split_args.fraction, "Share of sites in train (UAR)")->capture_default_str();
    split->add_option("--delta", split_args.delta, "Checkerboard square size, degrees")->capture_default_str();
    split->add_option("--offset", split_args.offset, "Checkerboard offset 0..3")->capture_default_str();
    split->add_flag("--swap", split_args.swap, "Swap train and test squares");
    split->add_flag("--all-partitions", split_args.all, "Emit all 8 offset/swap partitions");
    split->add_option("--seed", split_args.seed, "Seed")->capture_default_str();
    split->add_option("--validation", split_args.validation, "Validation share")->capture_default_str();
    split->add_option("--lon0", split_args.lon0, "Checkerboard origin longitude");
    split->add_option("--lat0", split_args.lat0, "Checkerboard origin latitude");
    split->add_option("--out", split_args.out, "Output file (or directory with --all-partitions)");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train one configured regime and evaluate it");
    train->add_option("--config", train_args.config, "Experiment config file");
    train->add_option("--split", train_args.split, "Split file (overrides the config's split)");
    train->add_option("--set", train_args.set, "Override: section.key=value");
    train->add_option("--out", train_args.out, "Run directory");

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
    eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint.bin")->required();
    eval->add_option("--split", eval_args.split, "Split file")->required();
    eval->add_option("--points", eval_args.points, "Labeled points (default: from the checkpoint config)");
    eval->add_option("--field", eval_args.field, "Proxy field (default: from the checkpoint config)");
    eval->add_option("--role", eval_args.role, "train | val | test")->capture_default_str();
    eval->add_option("--out", eval_args.out, "Metrics CSV")->capture_default_str();

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Train and evaluate over a Cartesian grid");
    sweep->add_option("--config", sweep_args.config, "Base experiment config");
    sweep->add_option("--set", sweep_args.set, "Override: section.key=value");
    sweep->add_option("--rho", sweep_args.rho, "Proxy sampling ratios")->delimiter(',');
    sweep->add_option("--lambda", sweep_args.lambda, "Proxy loss weights")->delimiter(',');
    sweep->add_option("--delta", sweep_args.delta, "Checkerboard sizes")->delimiter(',');
    sweep->add_option("--seed", sweep_args.seeds, "Seeds")->delimiter(',');
    sweep->add_option("--regime", sweep_args.regimes, "Regimes")->delimiter(',');
    sweep->add_option("--mode", sweep_args.modes, "Sampler modes")->delimiter(',');
    sweep->add_flag("--all-partitions", sweep_args.all_partitions, "Run all 8 checkerboard partitions per cell");
    sweep->add_option("--out", sweep_args.out, "Output directory")->capture_default_str();

    EmbedArgs embed_args;
    auto* embed = app.add_subcommand("embed", "Export location embeddings and their PCA over a grid");
    embed->add_option("--checkpoint", embed_args.checkpoint, "checkpoint.bin")->required();
    embed->add_option("--spacing", embed_args.spacing, "Grid spacing, degrees")->capture_default_str();
    embed->add_option("--times", embed_args.times, "Dates (YYYY-MM-DD)")->delimiter(',');
    embed->add_option("--components", embed_args.components, "PCA components to export")->capture_default_str();
    embed->add_option("--out", embed_args.out, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (print_defaults) {
            std::cout << "# experiment config (train, sweep)\n"
                      << fusion::ExperimentConfig{}.to_text() << "\n# world config (synth)\n"
                      << synth::WorldConfig{}.to_text();
            return kOk;
        }
        if (*synth) {
            return cmd_synth(synth_args);
        }
        if (*split) {
            return cmd_split(split_args);
        }
        if (*train) {
            return cmd_train(train_args);
        }
        if (*eval) {
            return cmd_eval(eval_args);
        }
        if (*sweep) {
            return cmd_sweep(sweep_args);
        }
        if (*embed) {
            return cmd_embed(embed_args);
        }
        std::cerr << app.help();
        return kConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
