#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aee/autoencoder.hpp"
#include "aee/datagen.hpp"
#include "aee/ensemble.hpp"
#include "aee/explainers.hpp"
#include "aee/latent_anomaly.hpp"
#include "aee/quality.hpp"

namespace aee {

struct PipelinePaths {
    std::filesystem::path out_dir = "aee_out";
    // Empty means "<out_dir>/corpus.csv" and "<out_dir>/model.aee".
    std::filesystem::path dataset;
    std::filesystem::path model;
};

struct ExplainSection {
    ExplainerConfig methods;
    std::vector<std::string> instances;  // empty: the first max_instances NOK series
    std::size_t max_instances = 4;
};

struct EnsembleSection {
    ScalingBounds bounds;
    std::optional<MethodWeights> weights;
};

struct QMSection {
    QMConfig qm;
    std::size_t ok_instances = 100;
};

/// Everything a run needs. Section seeds are derived from `seed` so one
/// number pins the whole pipeline.
struct PipelineConfig {
    static constexpr int kFormatVersion = 1;

    std::uint64_t seed = 42;
    PipelinePaths paths;
    GeneratorConfig generator;
    AEConfig autoencoder;
    DetectionConfig dbscan;
    ExplainSection explainer;
    EnsembleSection ensemble;
    QMSection qm;

    static PipelineConfig defaults();
    /// Writes the derived seeds into every section.
    void apply_seed();
    void validate() const;

    std::filesystem::path dataset_path() const;
    std::filesystem::path model_path() const;
};

nlohmann::json to_json(const PipelineConfig& c);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Light desk-scale architecture used by the default pipeline config.
AEConfig desk_autoencoder();

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view text);

struct CommandResult {
    std::string command;
    std::vector<std::filesystem::path> artifacts;
    double wall_seconds = 0.0;
    nlohmann::json summary;
};

enum class RenderKind { heatmap, boxplot, scatter, reconstruction };
RenderKind parse_render_kind(const std::string& name);
const char* to_string(RenderKind kind);

/// Runs pipeline commands against one output directory. Every command
/// writes `manifest_<command>.json` plus a plain-text timing sidecar.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    const PipelineConfig& config() const noexcept { return config_; }

    CommandResult gen();
    CommandResult train();
    CommandResult detect();
    CommandResult explain(Method method, Target target, const std::vector<std::string>& ids = {});
    CommandResult aee(Target target, const std::vector<std::string>& ids = {});
    CommandResult qm(Method method);
    CommandResult render(RenderKind kind, Method method = Method::aee,
                         const std::vector<std::string>& ids = {});
    CommandResult report();

private:
    std::filesystem::path out(const std::string& name) const;
    Dataset require_dataset() const;
    AEModel require_model() const;
    nlohmann::json require_json(const std::string& name, const std::string& producer) const;
    std::vector<std::string> pick_ids(const Dataset& data, const std::vector<std::string>& ids) const;
    CommandResult finish(CommandResult result, const nlohmann::json& seeds) const;

    PipelineConfig config_;
};

}  // namespace aee
