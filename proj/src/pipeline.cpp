#include "aee/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>

#include "aee/errors.hpp"
#include "aee/io.hpp"
#include "aee/json_util.hpp"
#include "aee/rng.hpp"
#include "aee/svg.hpp"

namespace aee {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// Stream ids for seeds derived from the master seed.
enum SeedStream : std::uint64_t {
    kGenerator = 1,
    kTraining = 2,
    kLime = 3,
    kShap = 4,
    kPerturbation = 5,
    kSelection = 6,
};

json explainer_json(const ExplainSection& e) {
    const auto& m = e.methods;
    return json{{"lime",
                 {{"segments", m.lime.segments},
                  {"samples", m.lime.samples},
                  {"kernel_width", m.lime.kernel_width},
                  {"ridge", m.lime.ridge}}},
                {"shap",
                 {{"segments", m.shap.segments}, {"samples", m.shap.samples}, {"exact", m.shap.exact}}},
                {"lrp", {{"epsilon", m.lrp.epsilon}}},
                {"instances", e.instances},
                {"max_instances", e.max_instances}};
}

ExplainSection explainer_from(const json& j) {
    reject_unknown_keys(j, "explainer", {"lime", "shap", "lrp", "instances", "max_instances"});
    ExplainSection e;
    auto& m = e.methods;
    if (j.contains("lime")) {
        const auto& l = j.at("lime");
        reject_unknown_keys(l, "explainer.lime", {"segments", "samples", "kernel_width", "ridge"});
        read_opt(l, "segments", m.lime.segments);
        read_opt(l, "samples", m.lime.samples);
        read_opt(l, "kernel_width", m.lime.kernel_width);
        read_opt(l, "ridge", m.lime.ridge);
    }
    if (j.contains("shap")) {
        const auto& s = j.at("shap");
        reject_unknown_keys(s, "explainer.shap", {"segments", "samples", "exact"});
        read_opt(s, "segments", m.shap.segments);
        read_opt(s, "samples", m.shap.samples);
        read_opt(s, "exact", m.shap.exact);
    }
    if (j.contains("lrp")) {
        reject_unknown_keys(j.at("lrp"), "explainer.lrp", {"epsilon"});
        read_opt(j.at("lrp"), "epsilon", m.lrp.epsilon);
    }
    read_opt(j, "instances", e.instances);
    read_opt(j, "max_instances", e.max_instances);
    return e;
}

json ensemble_json(const EnsembleSection& e) {
    json j{{"a_min", e.bounds.a_min}, {"a_max", e.bounds.a_max}};
    if (e.weights) {
        json w = json::object();
        for (const auto& [m, v] : *e.weights) w[to_string(m)] = v;
        j["weights"] = w;
    }
    return j;
}

EnsembleSection ensemble_from(const json& j) {
    reject_unknown_keys(j, "ensemble", {"a_min", "a_max", "weights"});
    EnsembleSection e;
    read_opt(j, "a_min", e.bounds.a_min);
    read_opt(j, "a_max", e.bounds.a_max);
    if (j.contains("weights") && !j.at("weights").is_null()) {
        MethodWeights w;
        for (const auto& item : j.at("weights").items()) {
            w[parse_method(item.key())] = item.value().get<double>();
        }
        e.weights = w;
    }
    return e;
}

json dbscan_json(const DetectionConfig& d) {
    json j{{"min_pts", d.min_pts}, {"standardize", d.standardize}};
    j["eps"] = d.eps ? json(*d.eps) : json(nullptr);
    return j;
}

DetectionConfig dbscan_from(const json& j) {
    reject_unknown_keys(j, "dbscan", {"eps", "min_pts", "standardize"});
    DetectionConfig d;
    if (j.contains("eps") && !j.at("eps").is_null()) d.eps = j.at("eps").get<double>();
    read_opt(j, "min_pts", d.min_pts);
    read_opt(j, "standardize", d.standardize);
    return d;
}

json qm_json(const QMSection& q) {
    return json{{"fraction", q.qm.perturbation.fraction},
                {"strategy", to_string(q.qm.perturbation.strategy)},
                {"trials", q.qm.trials},
                {"ok_instances", q.ok_instances}};
}

QMSection qm_from(const json& j) {
    reject_unknown_keys(j, "qm", {"fraction", "strategy", "trials", "ok_instances"});
    QMSection q;
    read_opt(j, "fraction", q.qm.perturbation.fraction);
    if (j.contains("strategy")) {
        q.qm.perturbation.strategy = parse_strategy(j.at("strategy").get<std::string>());
    }
    read_opt(j, "trials", q.qm.trials);
    read_opt(j, "ok_instances", q.ok_instances);
    return q;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
    const auto rel = p.lexically_relative(base);
    return (rel.empty() || *rel.begin() == "..") ? p.generic_string() : rel.generic_string();
}

std::string file_tag(const std::string& id) {
    std::string out;
    for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

std::vector<Label> labels_of(const Dataset& data) {
    std::vector<Label> out;
    for (const auto& s : data) {
        if (!s.label) throw DataError("series '" + s.id + "' has no label");
        out.push_back(*s.label);
    }
    return out;
}

const TimeSeries& find_series(const Dataset& data, const std::string& id) {
    for (const auto& s : data) {
        if (s.id == id) return s;
    }
    throw DataError("no series with id '" + id + "' in the dataset");
}

}  // namespace

AEConfig desk_autoencoder() {
    AEConfig c;
    c.encoder_blocks = {{8, 9, 0.0, true}, {16, 9, 0.0, true}, {16, 9, 0.0, true}};
    c.latent_dim = 3;
    c.decoder_blocks = {{16, 9, 0.0, true}, {16, 9, 0.0, true}, {8, 9, 0.0, true}};
    c.training.epochs = 20;
    c.training.batch_size = 32;
    return c;
}

PipelineConfig PipelineConfig::defaults() {
    PipelineConfig c;
    c.autoencoder = desk_autoencoder();
    c.apply_seed();
    return c;
}

void PipelineConfig::apply_seed() {
    generator.seed = derive_seed(seed, kGenerator);
    autoencoder.training.seed = derive_seed(seed, kTraining);
    explainer.methods.lime.seed = derive_seed(seed, kLime);
    explainer.methods.shap.seed = derive_seed(seed, kShap);
    qm.qm.perturbation.seed = derive_seed(seed, kPerturbation);
}

void PipelineConfig::validate() const {
    generator.validate();
    autoencoder.validate(generator.length);
    if (dbscan.eps && !(*dbscan.eps > 0.0)) throw ParameterError("dbscan eps must be positive");
    if (dbscan.min_pts < 1) throw ParameterError("dbscan min_pts must be >= 1");
    ensemble.bounds.validate();
    perturb_count(generator.length, qm.qm.perturbation.fraction);
    if (qm.qm.trials < 1) throw ParameterError("qm trials must be >= 1");
    if (explainer.max_instances < 1) throw ParameterError("max_instances must be >= 1");
    if (paths.out_dir.empty()) throw ParameterError("output directory must not be empty");
}

fs::path PipelineConfig::dataset_path() const {
    return paths.dataset.empty() ? paths.out_dir / "corpus.csv" : paths.dataset;
}

fs::path PipelineConfig::model_path() const {
    return paths.model.empty() ? paths.out_dir / "model.aee" : paths.model;
}

json to_json(const PipelineConfig& c) {
    json ae = c.autoencoder;
    ae["training"].erase("seed");
    json gen = c.generator;
    gen.erase("seed");
    return json{{"format_version", PipelineConfig::kFormatVersion},
                {"seed", c.seed},
                {"paths",
                 {{"out_dir", c.paths.out_dir.generic_string()},
                  {"dataset", c.paths.dataset.generic_string()},
                  {"model", c.paths.model.generic_string()}}},
                {"generator", gen},
                {"autoencoder", ae},
                {"dbscan", dbscan_json(c.dbscan)},
                {"explainer", explainer_json(c.explainer)},
                {"ensemble", ensemble_json(c.ensemble)},
                {"qm", qm_json(c.qm)}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
    reject_unknown_keys(j, "config",
                        {"format_version", "seed", "paths", "generator", "autoencoder", "dbscan",
                         "explainer", "ensemble", "qm"});
    PipelineConfig c = PipelineConfig::defaults();
    try {
        if (j.contains("format_version")) {
            const int v = j.at("format_version").get<int>();
            if (v != PipelineConfig::kFormatVersion) {
                throw VersionError("config format_version " + std::to_string(v) +
                                   " is not supported (expected " +
                                   std::to_string(PipelineConfig::kFormatVersion) + ")");
            }
        }
        read_opt(j, "seed", c.seed);
        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            reject_unknown_keys(p, "paths", {"out_dir", "dataset", "model"});
            if (p.contains("out_dir")) c.paths.out_dir = p.at("out_dir").get<std::string>();
            if (p.contains("dataset")) c.paths.dataset = p.at("dataset").get<std::string>();
            if (p.contains("model")) c.paths.model = p.at("model").get<std::string>();
        }
        if (j.contains("generator")) {
            if (j.at("generator").contains("seed")) {
                throw ParseError("generator.seed is derived; set the top-level 'seed' instead");
            }
            from_json(j.at("generator"), c.generator);
        }
        if (j.contains("autoencoder")) {
            const auto& a = j.at("autoencoder");
            if (a.contains("training") && a.at("training").contains("seed")) {
                throw ParseError("autoencoder.training.seed is derived; set the top-level 'seed' instead");
            }
            json merged = c.autoencoder;
            merged.merge_patch(a);
            // Block lists replace rather than merge.
            for (const char* key : {"encoder_blocks", "decoder_blocks", "encoder_dense", "decoder_dense"}) {
                if (a.contains(key)) merged[key] = a.at(key);
            }
            from_json(merged, c.autoencoder);
        }
        if (j.contains("dbscan")) c.dbscan = dbscan_from(j.at("dbscan"));
        if (j.contains("explainer")) c.explainer = explainer_from(j.at("explainer"));
        if (j.contains("ensemble")) c.ensemble = ensemble_from(j.at("ensemble"));
        if (j.contains("qm")) c.qm = qm_from(j.at("qm"));
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    c.apply_seed();
    return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ParseError("config '" + path.string() + "': " + e.what());
    }
    return pipeline_config_from_json(j);
}

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const char* to_string(RenderKind kind) {
    switch (kind) {
        case RenderKind::heatmap: return "heatmap";
        case RenderKind::boxplot: return "boxplot";
        case RenderKind::scatter: return "scatter";
        case RenderKind::reconstruction: return "reconstruction";
    }
    return "?";
}

RenderKind parse_render_kind(const std::string& name) {
    for (auto k : {RenderKind::heatmap, RenderKind::boxplot, RenderKind::scatter,
                   RenderKind::reconstruction}) {
        if (name == to_string(k)) return k;
    }
    throw ParameterError("unknown render kind '" + name + "'");
}

// Pipeline ---------------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) { config_.validate(); }

fs::path Pipeline::out(const std::string& name) const { return config_.paths.out_dir / name; }

Dataset Pipeline::require_dataset() const {
    const auto path = config_.dataset_path();
    if (!fs::exists(path)) throw MissingArtifact(path.generic_string(), "gen");
    return load_dataset(path);
}

AEModel Pipeline::require_model() const {
    const auto path = config_.model_path();
    if (!fs::exists(path)) throw MissingArtifact(path.generic_string(), "train");
    return load_model(path);
}

json Pipeline::require_json(const std::string& name, const std::string& producer) const {
    const auto path = out(name);
    if (!fs::exists(path)) throw MissingArtifact(path.generic_string(), producer);
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ParseError("'" + path.string() + "': " + e.what());
    }
}

std::vector<std::string> Pipeline::pick_ids(const Dataset& data,
                                            const std::vector<std::string>& ids) const {
    std::vector<std::string> chosen = ids.empty() ? config_.explainer.instances : ids;
    if (chosen.empty()) {
        for (const auto& s : data) {
            if (chosen.size() >= config_.explainer.max_instances) break;
            if (s.is_nok()) chosen.push_back(s.id);
        }
        for (const auto& s : data) {
            if (chosen.size() >= config_.explainer.max_instances) break;
            if (!s.is_nok()) chosen.push_back(s.id);
        }
    }
    for (const auto& id : chosen) find_series(data, id);
    return chosen;
}

CommandResult Pipeline::finish(CommandResult result, const json& seeds) const {
    json cfg = to_json(config_);
    cfg["paths"].erase("out_dir");  // runs in different directories share a hash
    const std::string name = "manifest_" + result.command;
    const auto timing_path = out(name + ".timing.txt");
    char buf[64];
    std::snprintf(buf, sizeof buf, "wall_seconds %.3f\n", result.wall_seconds);
    write_text(timing_path, buf);

    std::vector<std::string> artifacts;
    for (const auto& a : result.artifacts) artifacts.push_back(relative_to(a, config_.paths.out_dir));
    std::sort(artifacts.begin(), artifacts.end());
    json manifest{{"command", result.command},
                  {"config_hash", fnv1a_hex(cfg.dump())},
                  {"config", cfg},
                  {"versions", {{"aee", kVersion}, {"model_format", AEModel::kFormatVersion},
                                {"config_format", PipelineConfig::kFormatVersion}}},
                  {"seeds", seeds},
                  {"artifacts", artifacts},
                  {"timing", relative_to(timing_path, config_.paths.out_dir)}};
    const auto manifest_path = out(name + ".json");
    write_text(manifest_path, manifest.dump(2) + "\n");
    result.artifacts.push_back(timing_path);
    result.artifacts.push_back(manifest_path);
    return result;
}

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

CommandResult Pipeline::gen() {
    Stopwatch sw;
    const auto corpus = generate_corpus(config_.generator);
    CommandResult r{"gen", {}, 0.0, {}};
    save_dataset(config_.dataset_path(), corpus.data);
    const auto manifest_path = out("corpus_manifest.json");
    write_text(manifest_path, corpus.manifest().dump(1) + "\n");
    r.artifacts = {config_.dataset_path(), manifest_path};
    r.summary = {{"size", corpus.data.size()}, {"nok", config_.generator.nok_count()}};
    r.wall_seconds = sw.seconds();
    return finish(std::move(r), {{"master", config_.seed}, {"generator", config_.generator.seed}});
}

CommandResult Pipeline::train() {
    Stopwatch sw;
    const auto data = require_dataset();
    auto result = aee::train(data, config_.autoencoder);
    save_model(result.model, config_.model_path());
    json report = result.report;
    const auto report_path = out("train_report.json");
    write_text(report_path, report.dump(2) + "\n");
    CommandResult r{"train", {config_.model_path(), report_path}, 0.0, {}};
    r.summary = {{"best_epoch", result.report.best_epoch}, {"test_mse", result.report.test_mse}};
    r.wall_seconds = sw.seconds();
    return finish(std::move(r),
                  {{"master", config_.seed}, {"training", config_.autoencoder.training.seed}});
}

CommandResult Pipeline::detect() {
    Stopwatch sw;
    const auto data = require_dataset();
    const auto model = require_model();
    const auto det = aee::detect(model, data, config_.dbscan);
    json report{{"eps", det.eps},
                {"eps_source", config_.dbscan.eps ? "config" : "k-distance elbow"},
                {"min_pts", config_.dbscan.min_pts},
                {"clusters", det.clusters.cluster_count},
                {"outliers", std::count(det.flags.begin(), det.flags.end(), true)},
                {"series", data.size()}};
    const bool labeled = std::all_of(data.begin(), data.end(), [](const TimeSeries& s) { return s.label.has_value(); });
    if (labeled) report["scores"] = score(det.flags, labels_of(data));
    const auto detection_path = out("detection.csv");
    const auto report_path = out("detection_report.json");
    const auto scatter_path = out("scatter.csv");
    write_text(detection_path, detection_to_csv(data, det));
    write_text(report_path, report.dump(2) + "\n");
    write_text(scatter_path, scatter_to_csv(data, latent_scatter(det)));
    CommandResult r{"detect", {detection_path, report_path, scatter_path}, 0.0, report};
    r.wall_seconds = sw.seconds();
    return finish(std::move(r), {{"master", config_.seed}});
}

CommandResult Pipeline::explain(Method method, Target target, const std::vector<std::string>& ids) {
    if (method == Method::aee) return aee(target, ids);
    Stopwatch sw;
    const auto data = require_dataset();
    const auto model = require_model();
    std::vector<Explanation> out_list;
    for (const auto& id : pick_ids(data, ids)) {
        out_list.push_back(aee::explain(model, find_series(data, id), method, target, config_.explainer.methods));
    }
    const std::string stem = std::string("explanations_") + to_string(method) + "_" + target.name();
    const auto nd = out(stem + ".ndjson");
    const auto csv = out(stem + ".csv");
    write_text(nd, explanations_to_ndjson(out_list));
    write_text(csv, explanations_to_csv(out_list));
    CommandResult r{std::string("explain_") + to_string(method) + "_" + target.name(), {nd, csv}, 0.0,
                    {{"instances", out_list.size()}}};
    r.wall_seconds = sw.seconds();
    return finish(std::move(r), {{"master", config_.seed},
                                 {"lime", config_.explainer.methods.lime.seed},
                                 {"shap", config_.explainer.methods.shap.seed}});
}

CommandResult Pipeline::aee(Target target, const std::vector<std::string>& ids) {
    Stopwatch sw;
    std::map<Method, std::map<std::string, Explanation>> by_method;
    std::vector<std::string> order;
    for (Method m : kBaseMethods) {
        const std::string name = std::string("explanations_") + to_string(m) + "_" + target.name() + ".ndjson";
        const auto path = out(name);
        if (!fs::exists(path)) {
            throw MissingArtifact(path.generic_string(), std::string("explain --method ") + to_string(m) +
                                                             " --target " + target.name());
        }
        for (auto& e : explanations_from_ndjson(read_text(path))) {
            if (m == Method::gradcam) order.push_back(e.series_id);
            by_method[m][e.series_id] = std::move(e);
        }
    }
    const auto& wanted = ids.empty() ? order : ids;
    std::vector<Explanation> fused;
    for (const auto& id : wanted) {
        ExplanationSet set;
        for (Method m : kBaseMethods) {
            const auto it = by_method[m].find(id);
            if (it == by_method[m].end()) {
                throw MissingArtifact("explanation of '" + id + "' by " + to_string(m),
                                      std::string("explain --method ") + to_string(m) + " --ids " + id);
            }
            set.add(it->second);
        }
        fused.push_back(aggregate(set, config_.ensemble.bounds, config_.ensemble.weights).as_explanation());
    }
    const std::string stem = "explanations_aee_" + target.name();
    const auto nd = out(stem + ".ndjson");
    const auto csv = out(stem + ".csv");
    write_text(nd, explanations_to_ndjson(fused));
    write_text(csv, explanations_to_csv(fused));
    CommandResult r{"aee_" + target.name(), {nd, csv}, 0.0, {{"instances", fused.size()}}};
    r.wall_seconds = sw.seconds();
    return finish(std::move(r), {{"master", config_.seed}});
}

CommandResult Pipeline::qm(Method method) {
    Stopwatch sw;
    const auto data = require_dataset();
    const auto model = require_model();
    const std::uint64_t selection_seed = derive_seed(config_.seed, kSelection);
    Dataset subset;
    for (auto i : select_instances(data, config_.qm.ok_instances, selection_seed)) subset.push_back(data[i]);
    const auto eval = evaluate(model, subset, method,
                               importance_for(model, method, config_.explainer.methods), config_.qm.qm);
    const std::string m = to_string(method);
    const auto results_path = out("qm_" + m + ".csv");
    const auto summary_path = out("qm_summary_" + m + ".json");
    const auto summary_csv = out("qm_summary_" + m + ".csv");
    write_text(results_path, qm_results_to_csv(eval.results));
    json summary = qm_summary_json(eval.summary);
    summary["ordering_rate"] = {{"ok", eval.ordering_rate(Label::ok) ? json(*eval.ordering_rate(Label::ok)) : json(nullptr)},
                                {"nok", eval.ordering_rate(Label::nok) ? json(*eval.ordering_rate(Label::nok)) : json(nullptr)}};
    summary["perturbation"] = {{"fraction", config_.qm.qm.perturbation.fraction},
                               {"strategy", to_string(config_.qm.qm.perturbation.strategy)},
                               {"trials", config_.qm.qm.trials}};
    write_text(summary_path, summary.dump(2) + "\n");
    write_text(summary_csv, qm_summary_to_csv({eval.summary}));
    CommandResult r{"qm_" + m, {results_path, summary_path, summary_csv}, 0.0, summary["ordering_rate"]};
    r.wall_seconds = sw.seconds();
    return finish(std::move(r), {{"master", config_.seed},
                                 {"perturbation", config_.qm.qm.perturbation.seed},
                                 {"selection", selection_seed}});
}

namespace {

std::vector<std::pair<std::string, ScatterPoint>> read_scatter(const std::string& text,
                                                              std::vector<bool>& nok) {
    std::vector<std::pair<std::string, ScatterPoint>> out;
    std::size_t start = text.find('\n');
    if (start == std::string::npos) throw ParseError("scatter CSV has no header");
    ++start;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t p = 0;
        while (true) {
            const auto q = line.find(',', p);
            cells.push_back(line.substr(p, q == std::string::npos ? std::string::npos : q - p));
            if (q == std::string::npos) break;
            p = q + 1;
        }
        if (cells.size() != 5) throw ParseError("scatter CSV row needs 5 columns");
        ScatterPoint pt;
        pt.x = parse_double(cells[2]);
        pt.y = parse_double(cells[3]);
        if (cells[4] == "outlier") {
            pt.tag = ScatterTag::outlier;
        } else if (cells[4] == "ok_deviating") {
            pt.tag = ScatterTag::ok_deviating;
        } else if (cells[4] == "ok") {
            pt.tag = ScatterTag::ok;
        } else {
            throw ParseError("unknown scatter tag '" + cells[4] + "'");
        }
        nok.push_back(cells[1] == "1");
        out.emplace_back(cells[0], pt);
    }
    return out;
}

}  // namespace

CommandResult Pipeline::render(RenderKind kind, Method method, const std::vector<std::string>& ids) {
    Stopwatch sw;
    CommandResult r{std::string("render_") + to_string(kind), {}, 0.0, {}};
    const fs::path fig_dir = out("figures");
    switch (kind) {
        case RenderKind::heatmap: {
            const std::string name = std::string("explanations_") + to_string(method) + "_combined.ndjson";
            const auto path = out(name);
            if (!fs::exists(path)) {
                throw MissingArtifact(path.generic_string(),
                                      method == Method::aee ? "aee" : std::string("explain --method ") + to_string(method));
            }
            const auto data = require_dataset();
            const std::set<std::string> keep(ids.begin(), ids.end());
            for (const auto& e : explanations_from_ndjson(read_text(path))) {
                if (!keep.empty() && !keep.count(e.series_id)) continue;
                const auto& s = find_series(data, e.series_id);
                const auto file = fig_dir / ("heatmap_" + std::string(to_string(method)) + "_" + file_tag(e.series_id) + ".svg");
                write_text(file, svg::heatmap(s.values, e.values,
                                              std::string(to_string(method)) + " - " + e.series_id +
                                                  (s.is_nok() ? " (NOK)" : " (OK)")));
                r.artifacts.push_back(file);
            }
            r.command += std::string("_") + to_string(method);
            break;
        }
        case RenderKind::boxplot: {
            std::vector<QMSummary> summaries;
            for (Method m : {Method::gradcam, Method::lime, Method::shap, Method::lrp, Method::aee}) {
                const auto path = out(std::string("qm_summary_") + to_string(m) + ".json");
                if (fs::exists(path)) summaries.push_back(qm_summary_from_json(json::parse(read_text(path))));
            }
            if (summaries.empty()) throw MissingArtifact(out("qm_summary_<method>.json").generic_string(), "qm");
            const auto file = fig_dir / "boxplot.svg";
            write_text(file, svg::boxplot(summaries, "QM noise (green) vs. XAI (red)"));
            const auto csv = out("qm_summary.csv");
            write_text(csv, qm_summary_to_csv(summaries));
            r.artifacts = {file, csv};
            break;
        }
        case RenderKind::scatter: {
            const auto path = out("scatter.csv");
            if (!fs::exists(path)) throw MissingArtifact(path.generic_string(), "detect");
            std::vector<bool> nok;
            const auto rows = read_scatter(read_text(path), nok);
            std::vector<ScatterPoint> pts;
            for (const auto& [id, p] : rows) pts.push_back(p);
            const auto file = fig_dir / "scatter.svg";
            write_text(file, svg::scatter(pts, nok, "latent space (PCA)"));
            r.artifacts = {file};
            break;
        }
        case RenderKind::reconstruction: {
            const auto data = require_dataset();
            const auto model = require_model();
            for (const auto& id : pick_ids(data, ids)) {
                const auto& s = find_series(data, id);
                const auto file = fig_dir / ("reconstruction_" + file_tag(id) + ".svg");
                write_text(file, svg::reconstruction(s.values, reconstruct(model, s.values),
                                                     "reconstruction - " + id));
                r.artifacts.push_back(file);
            }
            break;
        }
    }
    r.wall_seconds = sw.seconds();
    return finish(std::move(r), {{"master", config_.seed}});
}

CommandResult Pipeline::report() {
    Stopwatch sw;
    const json detection = require_json("detection_report.json", "detect");
    json report{{"detection", detection}};
    if (fs::exists(out("train_report.json"))) {
        json train = require_json("train_report.json", "train");
        train.erase("epochs");
        report["training"] = train;
    }
    json qm = json::object();
    for (Method m : {Method::gradcam, Method::lime, Method::shap, Method::lrp, Method::aee}) {
        const std::string name = std::string("qm_summary_") + to_string(m) + ".json";
        if (fs::exists(out(name))) qm[to_string(m)] = require_json(name, "qm");
    }
    report["qm"] = qm;

    // File index from every manifest except this command's own.
    std::set<std::string> files;
    std::vector<fs::path> manifests;
    for (const auto& entry : fs::directory_iterator(config_.paths.out_dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("manifest_", 0) == 0 && entry.path().extension() == ".json" &&
            name != "manifest_report.json") {
            manifests.push_back(entry.path());
        }
    }
    std::sort(manifests.begin(), manifests.end());
    json commands = json::array();
    for (const auto& p : manifests) {
        const auto m = json::parse(read_text(p));
        commands.push_back({{"command", m.at("command")}, {"config_hash", m.at("config_hash")}});
        for (const auto& a : m.at("artifacts")) files.insert(a.get<std::string>());
        files.insert(relative_to(p, config_.paths.out_dir));
    }
    report["commands"] = commands;
    report["files"] = files;

    std::string md = "# Pipeline report\n\n## Detection\n\n";
    md += "- series: " + detection.at("series").dump() + "\n";
    md += "- eps: " + detection.at("eps").dump() + " (" + detection.at("eps_source").get<std::string>() + ")\n";
    md += "- clusters: " + detection.at("clusters").dump() + ", outliers: " + detection.at("outliers").dump() + "\n";
    if (detection.contains("scores")) {
        const auto& s = detection.at("scores");
        md += "\n| class | precision | recall | f1-score | support |\n|---|---|---|---|---|\n";
        for (const char* cls : {"0 (OK)", "1 (NOK)"}) {
            const auto& c = s.at(cls);
            char row[160];
            std::snprintf(row, sizeof row, "| %s | %.4f | %.4f | %.4f | %zu |\n", cls,
                          c.at("precision").get<double>(), c.at("recall").get<double>(),
                          c.at("f1-score").get<double>(), c.at("support").get<std::size_t>());
            md += row;
        }
    }
    if (!qm.empty()) {
        md += "\n## Quality measurement (normalized distances, medians)\n\n";
        md += "| method | OK noise | OK xai | NOK noise | NOK xai | NOK ordering rate |\n|---|---|---|---|---|---|\n";
        for (const auto& [name, s] : qm.items()) {
            const auto summary = qm_summary_from_json(s);
            md += "| " + name;
            for (Label l : {Label::ok, Label::nok}) {
                for (Condition c : {Condition::noise, Condition::xai}) {
                    const auto& st = summary.at(l, c);
                    char cell[32];
                    std::snprintf(cell, sizeof cell, " | %.4f", st.stats.median);
                    md += st.empty ? std::string(" | -") : std::string(cell);
                }
            }
            const auto& rate = s.at("ordering_rate").at("nok");
            char cell[32];
            std::snprintf(cell, sizeof cell, " | %.3f |\n", rate.is_null() ? 0.0 : rate.get<double>());
            md += rate.is_null() ? std::string(" | - |\n") : std::string(cell);
        }
    }
    md += "\n## Files\n\n";
    for (const auto& f : files) md += "- " + f + "\n";

    const auto json_path = out("report.json");
    const auto md_path = out("report.md");
    write_text(json_path, report.dump(2) + "\n");
    write_text(md_path, md);
    CommandResult r{"report", {json_path, md_path}, 0.0, {}};
    r.wall_seconds = sw.seconds();
    return finish(std::move(r), {{"master", config_.seed}});
}

}  // namespace aee
