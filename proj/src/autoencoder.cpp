#include "aee/autoencoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "aee/errors.hpp"
#include "aee/json_util.hpp"
#include "aee/parallel.hpp"

namespace aee {

using nlohmann::json;

std::size_t common_length(const Dataset& data) {
    if (data.empty()) throw DataError("dataset is empty");
    const std::size_t n = data.front().length();
    for (const auto& s : data) {
        if (s.length() != n) {
            throw DataError("series '" + s.id + "' has length " + std::to_string(s.length()) +
                            ", expected " + std::to_string(n));
        }
    }
    return n;
}

// Configuration ---------------------------------------------------------------

AEConfig AEConfig::default_config() {
    AEConfig c;
    c.encoder_blocks = {{32, 16, 0.0, true}, {64, 16, 0.0, true}, {128, 16, 0.0, true}};
    c.latent_dim = 3;
    c.decoder_blocks = {{128, 16, 0.0, true}, {64, 16, 0.0, true}, {32, 16, 0.0, true}};
    return c;
}

namespace {

void validate_blocks(const std::vector<ConvBlock>& blocks, const char* side) {
    if (blocks.empty() || blocks.size() > 3) {
        throw ParameterError(std::string(side) + " needs between 1 and 3 conv blocks, got " +
                             std::to_string(blocks.size()));
    }
    for (const auto& b : blocks) {
        if (b.filters == 0 || b.kernel == 0) {
            throw ParameterError(std::string(side) + " conv block needs filters and kernel > 0");
        }
        if (!(b.dropout >= 0.0 && b.dropout < 1.0)) {
            throw ParameterError(std::string(side) + " dropout must lie in [0, 1)");
        }
    }
}

void validate_dense(const std::vector<DenseBlock>& blocks, const char* side) {
    if (blocks.size() > 2) {
        throw ParameterError(std::string(side) + " allows at most 2 dense blocks");
    }
    for (const auto& b : blocks) {
        if (b.units == 0) throw ParameterError(std::string(side) + " dense block needs units > 0");
        if (!(b.dropout >= 0.0 && b.dropout < 1.0)) {
            throw ParameterError(std::string(side) + " dropout must lie in [0, 1)");
        }
    }
}

std::size_t upsample_count(const AEConfig& c) {
    return static_cast<std::size_t>(std::count_if(c.decoder_blocks.begin(), c.decoder_blocks.end(),
                                                  [](const ConvBlock& b) { return b.resample; }));
}

}  // namespace

void AEConfig::validate(std::size_t input_length) const {
    validate_blocks(encoder_blocks, "encoder");
    validate_blocks(decoder_blocks, "decoder");
    validate_dense(encoder_dense, "encoder");
    validate_dense(decoder_dense, "decoder");
    if (latent_dim < 1) throw ParameterError("latent_dim must be >= 1");
    const auto& t = training;
    double sum = 0.0;
    for (double f : t.split) {
        if (!(f > 0.0)) throw ParameterError("split fractions must all be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ParameterError("split fractions must sum to 1");
    if (t.epochs < 1) throw ParameterError("epochs must be >= 1");
    if (t.batch_size < 1) throw ParameterError("batch_size must be >= 1");
    if (!(t.optimizer.lr > 0.0)) throw ParameterError("learning rate must be positive");
    if (input_length > 0) {
        const std::size_t factor = std::size_t{1} << upsample_count(*this);
        if (input_length % factor != 0) {
            throw DimensionError("input length " + std::to_string(input_length) +
                                 " is not divisible by the decoder upsampling factor " +
                                 std::to_string(factor));
        }
    }
}

std::vector<LayerSpec> encoder_specs(const AEConfig& c) {
    std::vector<LayerSpec> specs;
    for (const auto& b : c.encoder_blocks) {
        specs.push_back(LayerSpec::conv(b.filters, b.kernel, c.padding));
        specs.push_back(LayerSpec::act(c.activation));
        if (b.dropout > 0.0) specs.push_back(LayerSpec::dropout(b.dropout));
        if (b.resample) specs.push_back(LayerSpec::maxpool(2));
    }
    specs.push_back(LayerSpec::flatten());
    for (const auto& d : c.encoder_dense) {
        specs.push_back(LayerSpec::dense(d.units));
        specs.push_back(LayerSpec::act(c.activation));
        if (d.dropout > 0.0) specs.push_back(LayerSpec::dropout(d.dropout));
    }
    specs.push_back(LayerSpec::dense(c.latent_dim));
    return specs;
}

std::vector<LayerSpec> decoder_specs(const AEConfig& c, std::size_t input_length) {
    const std::size_t factor = std::size_t{1} << upsample_count(c);
    const std::size_t start_len = input_length / factor;
    const std::size_t start_channels = c.decoder_blocks.front().filters;
    std::vector<LayerSpec> specs;
    for (const auto& d : c.decoder_dense) {
        specs.push_back(LayerSpec::dense(d.units));
        specs.push_back(LayerSpec::act(c.activation));
        if (d.dropout > 0.0) specs.push_back(LayerSpec::dropout(d.dropout));
    }
    specs.push_back(LayerSpec::dense(start_channels * start_len));
    specs.push_back(LayerSpec::act(c.activation));
    specs.push_back(LayerSpec::reshape({start_channels, start_len}));
    for (const auto& b : c.decoder_blocks) {
        if (b.resample) specs.push_back(LayerSpec::upsample(2));
        specs.push_back(LayerSpec::conv(b.filters, b.kernel, Padding::same));
        specs.push_back(LayerSpec::act(c.activation));
        if (b.dropout > 0.0) specs.push_back(LayerSpec::dropout(b.dropout));
    }
    specs.push_back(LayerSpec::conv(1, c.decoder_blocks.back().kernel, Padding::same));
    specs.push_back(LayerSpec::act(c.output_activation));
    return specs;
}

namespace {

const char* padding_name(Padding p) { return p == Padding::same ? "same" : "valid"; }

Padding parse_padding(const std::string& s) {
    if (s == "same") return Padding::same;
    if (s == "valid") return Padding::valid;
    throw ParameterError("unknown padding '" + s + "'");
}

const char* normalization_name(Normalization n) {
    return n == Normalization::none ? "none" : "per_series";
}

Normalization parse_normalization(const std::string& s) {
    if (s == "none") return Normalization::none;
    if (s == "per_series") return Normalization::per_series;
    throw ParameterError("unknown normalization '" + s + "'");
}

json conv_blocks_json(const std::vector<ConvBlock>& blocks, const char* resample_key) {
    json arr = json::array();
    for (const auto& b : blocks) {
        arr.push_back({{"filters", b.filters},
                       {"kernel", b.kernel},
                       {"dropout", b.dropout},
                       {resample_key, b.resample}});
    }
    return arr;
}

std::vector<ConvBlock> conv_blocks_from(const json& arr, const char* section,
                                        const char* resample_key) {
    std::vector<ConvBlock> blocks;
    for (const auto& item : arr) {
        reject_unknown_keys(item, section, {"filters", "kernel", "dropout", resample_key});
        ConvBlock b;
        read_opt(item, "filters", b.filters);
        read_opt(item, "kernel", b.kernel);
        read_opt(item, "dropout", b.dropout);
        read_opt(item, resample_key, b.resample);
        blocks.push_back(b);
    }
    return blocks;
}

json dense_json(const std::vector<DenseBlock>& blocks) {
    json arr = json::array();
    for (const auto& b : blocks) arr.push_back({{"units", b.units}, {"dropout", b.dropout}});
    return arr;
}

std::vector<DenseBlock> dense_from(const json& arr, const char* section) {
    std::vector<DenseBlock> blocks;
    for (const auto& item : arr) {
        reject_unknown_keys(item, section, {"units", "dropout"});
        DenseBlock b;
        read_opt(item, "units", b.units);
        read_opt(item, "dropout", b.dropout);
        blocks.push_back(b);
    }
    return blocks;
}

}  // namespace

void to_json(json& j, const AEConfig& c) {
    const auto& t = c.training;
    j = json{{"encoder_blocks", conv_blocks_json(c.encoder_blocks, "pool")},
             {"encoder_dense", dense_json(c.encoder_dense)},
             {"latent_dim", c.latent_dim},
             {"decoder_dense", dense_json(c.decoder_dense)},
             {"decoder_blocks", conv_blocks_json(c.decoder_blocks, "upsample")},
             {"activation", to_string(c.activation)},
             {"output_activation", to_string(c.output_activation)},
             {"padding", padding_name(c.padding)},
             {"normalization", normalization_name(c.normalization)},
             {"training",
              {{"epochs", t.epochs},
               {"batch_size", t.batch_size},
               {"optimizer",
                {{"kind", to_string(t.optimizer.kind)},
                 {"lr", t.optimizer.lr},
                 {"beta1", t.optimizer.beta1},
                 {"beta2", t.optimizer.beta2},
                 {"epsilon", t.optimizer.epsilon}}},
               {"seed", t.seed},
               {"split", t.split}}}};
}

void from_json(const json& j, AEConfig& c) {
    reject_unknown_keys(j, "autoencoder",
                        {"encoder_blocks", "encoder_dense", "latent_dim", "decoder_dense",
                         "decoder_blocks", "activation", "output_activation", "padding",
                         "normalization", "training"});
    if (j.contains("encoder_blocks")) {
        c.encoder_blocks = conv_blocks_from(j.at("encoder_blocks"), "encoder block", "pool");
    }
    if (j.contains("encoder_dense")) c.encoder_dense = dense_from(j.at("encoder_dense"), "dense block");
    read_opt(j, "latent_dim", c.latent_dim);
    if (j.contains("decoder_dense")) c.decoder_dense = dense_from(j.at("decoder_dense"), "dense block");
    if (j.contains("decoder_blocks")) {
        c.decoder_blocks = conv_blocks_from(j.at("decoder_blocks"), "decoder block", "upsample");
    }
    if (j.contains("activation")) c.activation = parse_activation(j.at("activation").get<std::string>());
    if (j.contains("output_activation")) {
        c.output_activation = parse_activation(j.at("output_activation").get<std::string>());
    }
    if (j.contains("padding")) c.padding = parse_padding(j.at("padding").get<std::string>());
    if (j.contains("normalization")) {
        c.normalization = parse_normalization(j.at("normalization").get<std::string>());
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        reject_unknown_keys(t, "autoencoder.training",
                            {"epochs", "batch_size", "optimizer", "seed", "split"});
        read_opt(t, "epochs", c.training.epochs);
        read_opt(t, "batch_size", c.training.batch_size);
        read_opt(t, "seed", c.training.seed);
        read_opt(t, "split", c.training.split);
        if (t.contains("optimizer")) {
            const auto& o = t.at("optimizer");
            reject_unknown_keys(o, "autoencoder.training.optimizer",
                                {"kind", "lr", "beta1", "beta2", "epsilon"});
            auto& oc = c.training.optimizer;
            if (o.contains("kind")) oc.kind = parse_optimizer(o.at("kind").get<std::string>());
            read_opt(o, "lr", oc.lr);
            read_opt(o, "beta1", oc.beta1);
            read_opt(o, "beta2", oc.beta2);
            read_opt(o, "epsilon", oc.epsilon);
        }
    }
}

// Model -----------------------------------------------------------------------

AEModel build_model(const AEConfig& config, std::size_t input_length, std::uint64_t seed) {
    config.validate(input_length);
    AEModel m;
    m.config = config;
    m.input_length = input_length;
    m.encoder = Network({1, input_length}, encoder_specs(config));
    m.decoder = Network({config.latent_dim}, decoder_specs(config, input_length));
    if (m.decoder.output_shape() != Shape{1, input_length}) {
        throw DimensionError("decoder output " + shape_string(m.decoder.output_shape()) +
                             " does not match input length " + std::to_string(input_length));
    }
    Rng enc_rng(derive_seed(seed, 1));
    Rng dec_rng(derive_seed(seed, 2));
    m.encoder.initialize(enc_rng);
    m.decoder.initialize(dec_rng);
    return m;
}

namespace {

struct Scale {
    double lo = 0.0;
    double hi = 1.0;
};

Scale series_scale(const AEModel& model, std::span<const double> series) {
    if (model.config.normalization == Normalization::none || series.empty()) return {0.0, 1.0};
    const auto [mn, mx] = std::minmax_element(series.begin(), series.end());
    return {*mn, *mx};
}

}  // namespace

Tensor prepare_input(const AEModel& model, std::span<const double> series) {
    if (series.size() != model.input_length) {
        throw DimensionError("series length " + std::to_string(series.size()) +
                             " does not match model input length " +
                             std::to_string(model.input_length));
    }
    Tensor t({1, series.size()});
    if (model.config.normalization == Normalization::none) {
        std::copy(series.begin(), series.end(), t.data.begin());
        return t;
    }
    const Scale s = series_scale(model, series);
    const double range = s.hi - s.lo;
    if (range > 0.0) {
        for (std::size_t i = 0; i < series.size(); ++i) t.data[i] = (series[i] - s.lo) / range;
    }
    return t;
}

std::vector<double> encode(const AEModel& model, std::span<const double> series) {
    return model.encoder.forward(prepare_input(model, series)).data;
}

std::vector<double> decode(const AEModel& model, std::span<const double> latent) {
    if (latent.size() != model.latent_dim()) {
        throw DimensionError("latent vector has " + std::to_string(latent.size()) +
                             " values, model expects " + std::to_string(model.latent_dim()));
    }
    return model.decoder.forward(Tensor({latent.size()}, {latent.begin(), latent.end()})).data;
}

std::vector<double> reconstruct(const AEModel& model, std::span<const double> series) {
    auto out = decode(model, encode(model, series));
    if (model.config.normalization == Normalization::per_series) {
        const Scale s = series_scale(model, series);
        for (double& v : out) v = v * (s.hi - s.lo) + s.lo;
    }
    return out;
}

double reconstruction_mse(const AEModel& model, std::span<const double> series) {
    const Tensor input = prepare_input(model, series);
    const Tensor out = model.decoder.forward(model.encoder.forward(input));
    return mse_loss(out, input).value;
}

// Training --------------------------------------------------------------------

void to_json(json& j, const TrainReport& r) {
    json epochs = json::array();
    for (const auto& e : r.epochs) {
        epochs.push_back({{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"val_mse", e.val_mse}});
    }
    auto split = [](const SplitInfo& s) {
        return json{{"size", s.size}, {"nok", s.nok}, {"nok_fraction", s.nok_fraction()}};
    };
    j = json{{"epochs", epochs},
             {"best_epoch", r.best_epoch},
             {"test_mse", r.test_mse},
             {"splits",
              {{"train", split(r.train)},
               {"validation", split(r.validation)},
               {"test", split(r.test)}}}};
}

Split stratified_split(const Dataset& data, const std::array<double, 3>& fractions,
                       std::uint64_t seed) {
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0)) throw ParameterError("split fractions must be nonnegative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ParameterError("split fractions must sum to 1");
    Split split;
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < data.size(); ++i) by_class[data[i].is_nok() ? 1 : 0].push_back(i);
    for (int cls = 0; cls < 2; ++cls) {
        auto& idx = by_class[cls];
        Rng rng(derive_seed(seed, 0x5917, static_cast<std::uint64_t>(cls)));
        rng.shuffle(std::span<std::size_t>(idx));
        const double n = static_cast<double>(idx.size());
        const auto n_train = static_cast<std::size_t>(std::llround(n * fractions[0]));
        const auto n_val = std::min(idx.size() - std::min(n_train, idx.size()),
                                    static_cast<std::size_t>(std::llround(n * fractions[1])));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (k < n_train) {
                split.train.push_back(idx[k]);
            } else if (k < n_train + n_val) {
                split.validation.push_back(idx[k]);
            } else {
                split.test.push_back(idx[k]);
            }
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

namespace {

SplitInfo split_info(const Dataset& data, const std::vector<std::size_t>& idx) {
    SplitInfo info;
    info.size = idx.size();
    for (auto i : idx) info.nok += data[i].is_nok() ? 1 : 0;
    return info;
}

double mean_mse(const AEModel& model, const Dataset& data, const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    std::vector<double> losses(idx.size());
    parallel_for(idx.size(), [&](std::size_t k) {
        losses[k] = reconstruction_mse(model, data[idx[k]].values);
    });
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train(const Dataset& data, const AEConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    const std::size_t length = common_length(data);
    config.validate(length);
    const auto& tc = config.training;

    TrainResult result;
    result.split = stratified_split(data, tc.split, tc.seed);
    const auto& split = result.split;
    if (split.train.empty()) throw DataError("training split is empty");

    AEModel model = build_model(config, length, tc.seed);
    Optimizer optimizer(tc.optimizer);

    const std::size_t batch = std::min(tc.batch_size, split.train.size());
    std::vector<std::vector<LayerGrads>> enc_grads(batch), dec_grads(batch);
    std::vector<double> sample_loss(batch);

    TrainReport& report = result.report;
    report.train = split_info(data, split.train);
    report.validation = split_info(data, split.validation);
    report.test = split_info(data, split.test);

    AEModel best = model;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order = split.train;

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        Rng order_rng(derive_seed(tc.seed, 0xE90C, static_cast<std::uint64_t>(epoch)));
        order_rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;

        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t count = std::min(batch, order.size() - start);
            parallel_for(count, [&](std::size_t b) {
                const std::size_t sample = order[start + b];
                Rng drop_rng(derive_seed(tc.seed, static_cast<std::uint64_t>(epoch), sample));
                const Tensor input = prepare_input(model, data[sample].values);
                ForwardTrace enc_trace, dec_trace;
                const Tensor latent =
                    model.encoder.forward(input, Mode::training, &drop_rng, &enc_trace);
                const Tensor out =
                    model.decoder.forward(latent, Mode::training, &drop_rng, &dec_trace);
                const LossResult loss = mse_loss(out, input);
                sample_loss[b] = loss.value;
                auto& eg = enc_grads[b];
                auto& dg = dec_grads[b];
                eg = model.encoder.make_grads();
                dg = model.decoder.make_grads();
                const Tensor g_latent = model.decoder.backward(dec_trace, loss.grad, &dg);
                model.encoder.backward(enc_trace, g_latent, &eg);
            });
            // Ordered reduction keeps results independent of the thread count.
            for (std::size_t b = 1; b < count; ++b) {
                add_grads(enc_grads[0], enc_grads[b]);
                add_grads(dec_grads[0], dec_grads[b]);
            }
            for (std::size_t b = 0; b < count; ++b) loss_sum += sample_loss[b];
            scale_grads(enc_grads[0], 1.0 / static_cast<double>(count));
            scale_grads(dec_grads[0], 1.0 / static_cast<double>(count));

            auto params = model.encoder.parameters();
            auto dec_params = model.decoder.parameters();
            params.insert(params.end(), dec_params.begin(), dec_params.end());
            auto grads = grad_views(enc_grads[0]);
            auto dec_g = grad_views(dec_grads[0]);
            grads.insert(grads.end(), dec_g.begin(), dec_g.end());
            optimizer.step(params, grads);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_mse = loss_sum / static_cast<double>(order.size());
        stats.val_mse = split.validation.empty() ? stats.train_mse
                                                 : mean_mse(model, data, split.validation);
        if (!std::isfinite(stats.train_mse) || !std::isfinite(stats.val_mse)) {
            throw TrainingDiverged(epoch, "training diverged at epoch " + std::to_string(epoch) +
                                              ": loss is not finite");
        }
        report.epochs.push_back(stats);
        if (stats.val_mse < best_val) {
            best_val = stats.val_mse;
            best = model;
            report.best_epoch = epoch;
        }
    }

    result.model = std::move(best);
    report.test_mse = mean_mse(result.model, data, split.test);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

// Architecture search ---------------------------------------------------------

namespace {

template <typename T>
const T& pick(const std::vector<T>& values, Rng& rng) {
    return values[static_cast<std::size_t>(rng.below(values.size()))];
}

double maybe_dropout(const SearchSpace& space, Rng& rng) {
    return rng.bernoulli(0.5) ? pick(space.dropout_rates, rng) : 0.0;
}

std::vector<ConvBlock> sample_conv(const SearchSpace& space, Rng& rng) {
    const std::size_t n =
        space.min_conv_blocks + rng.below(space.max_conv_blocks - space.min_conv_blocks + 1);
    std::vector<ConvBlock> blocks(n);
    for (auto& b : blocks) {
        b.filters = pick(space.filters, rng);
        b.kernel = pick(space.kernels, rng);
        b.dropout = maybe_dropout(space, rng);
        b.resample = rng.bernoulli(0.5);
    }
    return blocks;
}

std::vector<DenseBlock> sample_dense(const SearchSpace& space, Rng& rng) {
    std::vector<DenseBlock> blocks(rng.below(space.max_dense_blocks + 1));
    for (auto& b : blocks) {
        b.units = pick(space.units, rng);
        b.dropout = maybe_dropout(space, rng);
    }
    return blocks;
}

void check_space(const SearchSpace& space) {
    if (space.filters.empty() || space.kernels.empty() || space.units.empty() ||
        space.activations.empty() || space.dropout_rates.empty()) {
        throw ParameterError("search space has an empty value list");
    }
    if (space.min_conv_blocks < 1 || space.min_conv_blocks > space.max_conv_blocks ||
        space.max_conv_blocks > 3 || space.max_dense_blocks > 2) {
        throw ParameterError("search space block bounds are empty or exceed the allowed range");
    }
}

}  // namespace

AEConfig sample_config(const SearchSpace& space, const AEConfig& base, Rng& rng) {
    check_space(space);
    AEConfig c = base;
    c.encoder_blocks = sample_conv(space, rng);
    c.encoder_dense = sample_dense(space, rng);
    c.decoder_dense = sample_dense(space, rng);
    c.decoder_blocks = sample_conv(space, rng);
    c.activation = pick(space.activations, rng);
    c.output_activation = pick(space.activations, rng);
    return c;
}

SearchResult random_search(const Dataset& data, const SearchSpace& space, const AEConfig& base,
                           int trials, int epochs, std::uint64_t seed) {
    if (trials < 1) throw ParameterError("random search needs at least one trial");
    const std::size_t length = common_length(data);
    check_space(space);
    Rng rng(derive_seed(seed, 0x5EA4C));
    SearchResult result;
    for (int t = 0; t < trials; ++t) {
        AEConfig cfg;
        bool found = false;
        for (int attempt = 0; attempt < 100 && !found; ++attempt) {
            cfg = sample_config(space, base, rng);
            try {
                cfg.validate(length);
                found = true;
            } catch (const Error&) {
            }
        }
        if (!found) {
            throw ParameterError("no configuration in the search space fits input length " +
                                 std::to_string(length));
        }
        cfg.training.epochs = epochs;
        cfg.training.seed = derive_seed(seed, static_cast<std::uint64_t>(t));
        const TrainResult trained = train(data, cfg);
        const auto& rep = trained.report;
        result.leaderboard.push_back({cfg, rep.epochs.at(rep.best_epoch - 1).val_mse});
    }
    std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                     [](const SearchEntry& a, const SearchEntry& b) { return a.val_mse < b.val_mse; });
    result.best = result.leaderboard.front().config;
    return result;
}

}  // namespace aee
