// SPDX-License-Identifier: Apache-2.0
#include "geoprox/fusion/experiment.hpp"

#include "geoprox/errors.hpp"
#include "geoprox/nd/checkpoint.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace geoprox::fusion {
namespace {

using io::format_double;

template <class T>
std::string join(const std::vector<T>& v)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        os << (i ? "," : "");
        if constexpr (std::is_floating_point_v<T>) {
            os << format_double(v[i]);
        } else {
            os << v[i];
        }
    }
    return os.str();
}

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys{
        "experiment.regime", "experiment.seed",
        "data.points", "data.field", "data.table", "output.dir",
        "model.obs_hidden", "model.d1", "model.head_hidden",
        "encoder.sigmas", "encoder.freqs_per_level", "encoder.time", "encoder.time_sigmas", "encoder.time_freqs",
        "encoder.hidden", "encoder.d2",
        "loss.lambda", "loss.weights",
        "sampler.batch", "sampler.rho", "sampler.mode",
        "optim.lr", "optim.beta1", "optim.beta2", "optim.eps", "optim.weight_decay", "optim.clip", "optim.epochs",
        "optim.pretrain_epochs", "optim.plateau_factor", "optim.plateau_patience", "optim.min_delta",
        "optim.stop_patience", "optim.min_lr", "optim.restore_best", "optim.max_redraw_rounds",
        "split.protocol", "split.fraction", "split.delta", "split.offset", "split.swap", "split.validation",
        "split.lon0", "split.lat0", "split.file",
    };
    return keys;
}

nd::Tensor row_tensor(const Eigen::RowVectorXd& v)
{
    return nd::Tensor({static_cast<std::size_t>(v.size())}, nd::Matrix(v));
}

Eigen::RowVectorXd row_of(const nd::Checkpoint& ck, const std::string& name)
{
    const auto* t = ck.buffer(name);
    if (!t) {
        throw DataError("checkpoint: missing buffer '" + name + "'");
    }
    return Eigen::Map<const Eigen::RowVectorXd>(t->data(), static_cast<Eigen::Index>(t->size()));
}

std::vector<std::pair<std::string, const nd::Matrix*>> rff_buffers(const FusionModel& model)
{
    std::vector<std::pair<std::string, const nd::Matrix*>> out;
    if (const auto* enc = model.encoder()) {
        const auto& s = enc->spatial_bank().levels();
        for (std::size_t k = 0; k < s.size(); ++k) {
            out.emplace_back("rff.spatial." + std::to_string(k), &s[k].freqs);
        }
        const auto& t = enc->time_encoder().bank().levels();
        for (std::size_t k = 0; k < t.size(); ++k) {
            out.emplace_back("rff.time." + std::to_string(k), &t[k].freqs);
        }
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    os << text;
    if (!os) {
        throw DataError("write failed for " + path.string());
    }
}

} // namespace

void ExperimentConfig::validate() const
{
    const auto fail = [](const std::string& what) { throw ConfigError(what); };
    if (split.protocol != "uar" && split.protocol != "checkerboard" && split.protocol != "file") {
        fail("split.protocol: expected uar, checkerboard or file");
    }
    if (!(split.fraction > 0.0 && split.fraction < 1.0)) {
        fail("split.fraction: must lie in (0, 1)");
    }
    if (!(split.delta > 0.0)) {
        fail("split.delta: must be positive");
    }
    if (!(split.validation_share >= 0.0 && split.validation_share < 1.0)) {
        fail("split.validation: must lie in [0, 1)");
    }
    if (split.protocol == "file" && split.file.empty()) {
        fail("split.file: required when split.protocol = file");
    }
    if (!(model.loss.lambda >= 0.0)) {
        fail("loss.lambda: must be non-negative");
    }
    if (train.batch <= 0) {
        fail("sampler.batch: must be positive");
    }
    if (!(train.rho >= 0.0)) {
        fail("sampler.rho: must be non-negative");
    }
    if (!(train.adam.lr > 0.0)) {
        fail("optim.lr: must be positive");
    }
    if (train.epochs < 0 || train.pretrain_epochs < 0) {
        fail("optim.epochs: must be non-negative");
    }
    if (model.d1 <= 0 || model.loc.out_dim <= 0) {
        fail("model.d1 / encoder.d2: must be positive");
    }
    if (model.loc.sigmas.empty() || model.loc.freqs_per_level <= 0) {
        fail("encoder.sigmas: at least one level with positive frequency count");
    }
    for (double s : model.loc.sigmas) {
        if (!(s > 0.0)) {
            fail("encoder.sigmas: entries must be positive");
        }
    }
    for (double w : model.loss.weights) {
        if (!(w >= 0.0)) {
            fail("loss.weights: entries must be non-negative");
        }
    }
}

std::string ExperimentConfig::to_text() const
{
    std::ostringstream os;
    os << "[experiment]\nregime = " << to_string(model.regime) << "\nseed = " << seed << "\n\n";
    os << "[data]\npoints = " << points << "\nfield = " << field << "\ntable = " << table << "\n\n";
    os << "[output]\ndir = " << output << "\n\n";
    os << "[model]\nobs_hidden = " << join(model.obs_hidden) << "\nd1 = " << model.d1
       << "\nhead_hidden = " << join(model.head_hidden) << "\n\n";
    os << "[encoder]\nsigmas = " << join(model.loc.sigmas) << "\nfreqs_per_level = " << model.loc.freqs_per_level
       << "\ntime = " << geo::to_string(model.loc.time_kind) << "\ntime_sigmas = " << join(model.loc.time_sigmas)
       << "\ntime_freqs = " << model.loc.time_freqs << "\nhidden = " << join(model.loc.hidden)
       << "\nd2 = " << model.loc.out_dim << "\n\n";
    os << "[loss]\nlambda = " << format_double(model.loss.lambda) << "\nweights = " << join(model.loss.weights)
       << "\n\n";
    os << "[sampler]\nbatch = " << train.batch << "\nrho = " << format_double(train.rho)
       << "\nmode = " << splits::to_string(train.mode) << "\n\n";
    const auto& a = train.adam;
    const auto& p = train.plateau;
    os << "[optim]\nlr = " << format_double(a.lr) << "\nbeta1 = " << format_double(a.beta1)
       << "\nbeta2 = " << format_double(a.beta2) << "\neps = " << format_double(a.eps)
       << "\nweight_decay = " << format_double(a.weight_decay) << "\nclip = " << format_double(a.clip_norm)
       << "\nepochs = " << train.epochs << "\npretrain_epochs = " << train.pretrain_epochs
       << "\nplateau_factor = " << format_double(p.factor) << "\nplateau_patience = " << p.patience
       << "\nmin_delta = " << format_double(p.min_delta) << "\nstop_patience = " << p.stop_patience
       << "\nmin_lr = " << format_double(p.min_lr) << "\nrestore_best = " << (train.restore_best ? "true" : "false")
       << "\nmax_redraw_rounds = " << train.max_redraw_rounds << "\n\n";
    os << "[split]\nprotocol = " << split.protocol << "\nfraction = " << format_double(split.fraction)
       << "\ndelta = " << format_double(split.delta) << "\noffset = " << splits::to_string(split.offset)
       << "\nswap = " << (split.swap ? "true" : "false") << "\nvalidation = " << format_double(split.validation_share)
       << "\nlon0 = " << (split.lon0 ? format_double(*split.lon0) : "")
       << "\nlat0 = " << (split.lat0 ? format_double(*split.lat0) : "") << "\nfile = " << split.file << "\n";
    return os.str();
}

std::uint64_t ExperimentConfig::hash() const
{
    return nd::fnv1a64(to_text());
}

ExperimentConfig ExperimentConfig::from_doc(const io::KeyValueDoc& doc)
{
    for (const auto& key : doc.keys()) {
        if (!known_keys().count(key)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    ExperimentConfig c;
    auto& m = c.model;
    if (auto r = doc.find("experiment.regime")) {
        m.regime = parse_regime(*r);
    }
    c.seed = static_cast<std::uint64_t>(doc.get_int("experiment.seed", static_cast<long long>(c.seed)));
    c.points = doc.get_string("data.points", c.points);
    c.field = doc.get_string("data.field", c.field);
    c.table = doc.get_string("data.table", c.table);
    c.output = doc.get_string("output.dir", c.output);

    m.obs_hidden = doc.get_ints("model.obs_hidden", m.obs_hidden);
    m.d1 = static_cast<int>(doc.get_int("model.d1", m.d1));
    m.head_hidden = doc.get_ints("model.head_hidden", m.head_hidden);
    m.loc.sigmas = doc.get_doubles("encoder.sigmas", m.loc.sigmas);
    m.loc.freqs_per_level = static_cast<int>(doc.get_int("encoder.freqs_per_level", m.loc.freqs_per_level));
    if (auto t = doc.find("encoder.time")) {
        m.loc.time_kind = geo::parse_time_kind(*t);
    }
    m.loc.time_sigmas = doc.get_doubles("encoder.time_sigmas", m.loc.time_sigmas);
    m.loc.time_freqs = static_cast<int>(doc.get_int("encoder.time_freqs", m.loc.time_freqs));
    m.loc.hidden = doc.get_ints("encoder.hidden", m.loc.hidden);
    m.loc.out_dim = static_cast<int>(doc.get_int("encoder.d2", m.loc.out_dim));
    m.loss.lambda = doc.get_double("loss.lambda", m.loss.lambda);
    m.loss.weights = doc.get_doubles("loss.weights", m.loss.weights);

    auto& t = c.train;
    t.batch = static_cast<int>(doc.get_int("sampler.batch", t.batch));
    t.rho = doc.get_double("sampler.rho", t.rho);
    if (auto s = doc.find("sampler.mode")) {
        t.mode = splits::parse_sampler_mode(*s);
    }
    t.adam.lr = doc.get_double("optim.lr", t.adam.lr);
    t.adam.beta1 = doc.get_double("optim.beta1", t.adam.beta1);
    t.adam.beta2 = doc.get_double("optim.beta2", t.adam.beta2);
    t.adam.eps = doc.get_double("optim.eps", t.adam.eps);
    t.adam.weight_decay = doc.get_double("optim.weight_decay", t.adam.weight_decay);
    t.adam.clip_norm = doc.get_double("optim.clip", t.adam.clip_norm);
    t.epochs = static_cast<int>(doc.get_int("optim.epochs", t.epochs));
    t.pretrain_epochs = static_cast<int>(doc.get_int("optim.pretrain_epochs", t.pretrain_epochs));
    t.plateau.factor = doc.get_double("optim.plateau_factor", t.plateau.factor);
    t.plateau.patience = static_cast<int>(doc.get_int("optim.plateau_patience", t.plateau.patience));
    t.plateau.min_delta = doc.get_double("optim.min_delta", t.plateau.min_delta);
    t.plateau.stop_patience = static_cast<int>(doc.get_int("optim.stop_patience", t.plateau.stop_patience));
    t.plateau.min_lr = doc.get_double("optim.min_lr", t.plateau.min_lr);
    t.restore_best = doc.get_bool("optim.restore_best", t.restore_best);
    t.max_redraw_rounds = static_cast<int>(doc.get_int("optim.max_redraw_rounds", t.max_redraw_rounds));

    auto& s = c.split;
    s.protocol = doc.get_string("split.protocol", s.protocol);
    s.fraction = doc.get_double("split.fraction", s.fraction);
    s.delta = doc.get_double("split.delta", s.delta);
    if (auto o = doc.find("split.offset")) {
        s.offset = splits::parse_offset(*o);
    }
    s.swap = doc.get_bool("split.swap", s.swap);
    s.validation_share = doc.get_double("split.validation", s.validation_share);
    if (auto v = doc.find("split.lon0"); v && !v->empty()) {
        s.lon0 = io::parse_double(*v, "split.lon0");
    }
    if (auto v = doc.find("split.lat0"); v && !v->empty()) {
        s.lat0 = io::parse_double(*v, "split.lat0");
    }
    s.file = doc.get_string("split.file", s.file);
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path)
{
    return from_doc(io::KeyValueDoc::load(path));
}

splits::SplitAssignment make_split(const SplitSpec& spec, const io::Dataset& data, const DomainBox& box,
                                   std::uint64_t seed)
{
    if (spec.protocol == "uar") {
        return splits::uar_site_split(data, spec.fraction, seed, spec.validation_share);
    }
    if (spec.protocol == "checkerboard") {
        splits::CheckerboardConfig cb;
        cb.delta = spec.delta;
        cb.lon0 = spec.lon0.value_or(box.lon_min);
        cb.lat0 = spec.lat0.value_or(box.lat_min);
        cb.offset = spec.offset;
        cb.swap = spec.swap;
        return splits::checkerboard_split(data, cb, seed, spec.validation_share);
    }
    return splits::align_split(splits::read_split_file(spec.file), data);
}

ModelConfig resolve_model_config(const ExperimentConfig& cfg, const io::Dataset& data, const io::ProxyField& field)
{
    ModelConfig m = cfg.model;
    m.feature_dim = static_cast<int>(data.feature_count());
    m.proxy_channels = field.channel_count();
    m.loss.validate(m.proxy_channels);
    return m;
}

ExperimentRun run_experiment(const ExperimentConfig& cfg, const io::Dataset& data, const io::ProxyField& field,
                             const splits::SplitAssignment& split, std::ostream* log,
                             std::shared_ptr<const geo::FrozenEmbeddingTable> table)
{
    cfg.validate();
    const auto mcfg = resolve_model_config(cfg, data, field);
    if (mcfg.regime == Regime::frozen_le && !table) {
        if (cfg.table.empty()) {
            throw ConfigError("data.table: the frozen-LE regime needs an embedding table");
        }
        table = std::make_shared<const geo::FrozenEmbeddingTable>(geo::FrozenEmbeddingTable::load(cfg.table));
    }
    ExperimentRun run;
    run.split = split;
    run.data = prepare_data(data, field, split, mcfg.regime);
    const splits::SeedStreams streams(cfg.seed);
    auto init = streams.stream("init");
    run.model = std::make_unique<FusionModel>(mcfg, run.data.box, run.data.year_min, run.data.year_max, init, table);
    cache_encoder_inputs(run.data, *run.model);
    run.train = train_model(*run.model, run.data, cfg.train, streams, log);
    run.test = evaluate_split(*run.model, run.data.test, run.data.stats);
    if (run.data.train.size() >= 2) {
        run.train_metrics = evaluate_split(*run.model, run.data.train, run.data.stats);
    }
    return run;
}

geo::FrozenEmbeddingTable export_site_table(const FusionModel& model, const io::SiteTable& sites, const TimeSpan& span,
                                            double tolerance)
{
    if (!model.encoder()) {
        throw UnsupportedRegimeError("no location encoder in regime " + std::string(to_string(model.regime())));
    }
    const std::int64_t mid = span.first_day + (span.last_day - span.first_day) / 2;
    std::vector<SpaceTime> where;
    std::vector<double> lon;
    std::vector<double> lat;
    for (const auto& s : sites.sites()) {
        where.push_back({s.lon, s.lat, mid});
        lon.push_back(s.lon);
        lat.push_back(s.lat);
    }
    return geo::FrozenEmbeddingTable(std::move(lon), std::move(lat), model.location_embedding(where), tolerance);
}

void save_model_checkpoint(const std::filesystem::path& path, const ExperimentConfig& cfg, const FusionModel& model,
                           const PreparedData& data)
{
    nd::Checkpoint ck;
    ck.seed = cfg.seed;
    ck.config_text = cfg.to_text();
    ck.config_hash = nd::fnv1a64(ck.config_text);
    for (const auto* g : model.groups()) {
        ck.groups.push_back(*g);
    }
    Eigen::RowVectorXd domain(6);
    domain << data.box.lon_min, data.box.lon_max, data.box.lat_min, data.box.lat_max,
        static_cast<double>(data.span.first_day), static_cast<double>(data.span.last_day);
    ck.buffers.push_back({"domain", row_tensor(domain)});
    ck.buffers.push_back({"norm.features.mean", row_tensor(data.stats.features.mean)});
    ck.buffers.push_back({"norm.features.std", row_tensor(data.stats.features.std)});
    ck.buffers.push_back({"norm.target.mean", row_tensor(data.stats.target.mean)});
    ck.buffers.push_back({"norm.target.std", row_tensor(data.stats.target.std)});
    ck.buffers.push_back({"norm.proxy.mean", row_tensor(data.stats.proxy.mean)});
    ck.buffers.push_back({"norm.proxy.std", row_tensor(data.stats.proxy.std)});
    for (const auto& [name, freqs] : rff_buffers(model)) {
        ck.buffers.push_back({name, nd::Tensor::from_matrix(*freqs)});
    }
    nd::save_checkpoint(path, ck);
}

LoadedModel load_model_checkpoint(const std::filesystem::path& path,
                                  std::shared_ptr<const geo::FrozenEmbeddingTable> table)
{
    const auto ck = nd::load_checkpoint(path);
    if (nd::fnv1a64(ck.config_text) != ck.config_hash) {
        throw DataError(path.string() + ": config hash mismatch");
    }
    LoadedModel out;
    out.config = ExperimentConfig::from_doc(io::KeyValueDoc::parse(ck.config_text));
    if (out.config.seed != ck.seed) {
        throw DataError(path.string() + ": seed does not match the stored config");
    }
    const auto domain = row_of(ck, "domain");
    if (domain.size() != 6) {
        throw DataError(path.string() + ": malformed domain buffer");
    }
    out.box = {domain(0), domain(1), domain(2), domain(3)};
    out.span = {static_cast<std::int64_t>(domain(4)), static_cast<std::int64_t>(domain(5))};
    out.stats.features.mean = row_of(ck, "norm.features.mean");
    out.stats.features.std = row_of(ck, "norm.features.std");
    out.stats.target.mean = row_of(ck, "norm.target.mean");
    out.stats.target.std = row_of(ck, "norm.target.std");
    out.stats.proxy.mean = row_of(ck, "norm.proxy.mean");
    out.stats.proxy.std = row_of(ck, "norm.proxy.std");

    ModelConfig mcfg = out.config.model;
    mcfg.feature_dim = static_cast<int>(out.stats.features.size());
    mcfg.proxy_channels = static_cast<int>(out.stats.proxy.size());
    if (mcfg.regime == Regime::frozen_le && !table) {
        if (out.config.table.empty()) {
            throw ConfigError("data.table: the frozen-LE regime needs an embedding table");
        }
        table = std::make_shared<const geo::FrozenEmbeddingTable>(geo::FrozenEmbeddingTable::load(out.config.table));
    }
    const splits::SeedStreams streams(out.config.seed);
    auto init = streams.stream("init");
    out.model = std::make_unique<FusionModel>(mcfg, out.box, Date::from_days(out.span.first_day).year,
                                              Date::from_days(out.span.last_day).year, init, table);
    for (const auto& [name, freqs] : rff_buffers(*out.model)) {
        const auto* stored = ck.buffer(name);
        if (!stored || stored->matrix().rows() != freqs->rows() || stored->matrix().cols() != freqs->cols() ||
            stored->matrix() != *freqs) {
            throw DataError(path.string() + ": RFF frequencies '" + name + "' do not match the stored seed");
        }
    }
    if (out.model->has_proxy_head() && !ck.group(std::string(kHeadGGroup))) {
        out.model->drop_proxy_head();
    }
    for (auto* g : out.model->groups()) {
        const auto* src = ck.group(g->name);
        if (!src) {
            throw DataError(path.string() + ": missing parameter group '" + g->name + "'");
        }
        if (src->params.size() != g->params.size()) {
            throw DataError(path.string() + ": parameter count mismatch in '" + g->name + "'");
        }
        for (std::size_t i = 0; i < src->params.size(); ++i) {
            if (src->params[i].value.size() != g->params[i].value.size()) {
                throw DataError(path.string() + ": shape mismatch for " + g->name + "/" + g->params[i].name);
            }
            auto& dst = g->params[i].value.matrix();
            dst = Eigen::Map<const nd::Matrix>(src->params[i].value.data(), dst.rows(), dst.cols());
        }
        g->trainable = src->trainable;
    }
    return out;
}

PreparedSplit prepare_for_model(const LoadedModel& loaded, const io::Dataset& data, const io::ProxyField& field,
                                const std::vector<std::size_t>& rows)
{
    const auto k = static_cast<Eigen::Index>(data.feature_count());
    if (k != loaded.stats.features.size()) {
        throw DataError("dataset has " + std::to_string(k) + " features, checkpoint expects " +
                        std::to_string(loaded.stats.features.size()));
    }
    const bool stack = loaded.model->regime() == Regime::proxy_stacked;
    const Eigen::Index m = stack ? field.channel_count() : 0;
    PreparedSplit s;
    s.index = rows;
    s.features.resize(static_cast<Eigen::Index>(rows.size()), k + m);
    s.y.resize(static_cast<Eigen::Index>(rows.size()), 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& x = data.samples[rows[i]];
        const auto r = static_cast<Eigen::Index>(i);
        s.features.row(r).head(k) = loaded.stats.features.apply(x.features);
        if (stack) {
            const auto z = field.sample(x.lon, x.lat, x.date.days());
            s.features.row(r).tail(m) = z ? loaded.stats.proxy.apply(*z) : Eigen::RowVectorXd::Zero(m);
        }
        s.where.push_back(x.where());
        s.y(r, 0) = loaded.stats.apply_target(x.y);
        s.y_raw.push_back(x.y);
    }
    if (!s.where.empty()) {
        s.loc_inputs = loaded.model->encoder_inputs(s.where);
    }
    return s;
}

void write_run_directory(const std::filesystem::path& dir, const ExperimentConfig& cfg, const ExperimentRun& run,
                         const std::string& loss_log)
{
    std::filesystem::create_directories(dir);
    write_text(dir / "config.ini", cfg.to_text());
    write_text(dir / "seed.txt", std::to_string(cfg.seed) + "\n");
    splits::write_split_file(dir / "split.csv", run.split);
    write_text(dir / "loss.log", loss_log);
    std::ostringstream ep;
    ep << "stage,epoch,train_loss,val_loss,lr\n";
    for (const auto& e : run.train.epochs) {
        ep << e.stage << ',' << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss)
           << ',' << format_double(e.lr) << '\n';
    }
    write_text(dir / "epochs.csv", ep.str());
    metrics::write_metrics_csv(dir / "metrics.csv", std::span<const metrics::MetricReport>(&run.test, 1));
    save_model_checkpoint(dir / "checkpoint.bin", cfg, *run.model, run.data);
}

} // namespace geoprox::fusion
