// Command-line front end for the autoencoder explanation pipeline.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aee/errors.hpp"
#include "aee/io.hpp"
#include "aee/pipeline.hpp"

namespace {

int exit_code(aee::ErrorCategory c) {
    switch (c) {
        case aee::ErrorCategory::parameter: return 2;
        case aee::ErrorCategory::dimension: return 3;
        case aee::ErrorCategory::state: return 4;
        case aee::ErrorCategory::data: return 5;
        case aee::ErrorCategory::numerical: return 6;
        case aee::ErrorCategory::diverged: return 7;
        case aee::ErrorCategory::version: return 8;
        case aee::ErrorCategory::parse: return 9;
        case aee::ErrorCategory::io: return 10;
        case aee::ErrorCategory::missing_artifact: return 11;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Autoencoder latent-space anomaly detection with explanation ensembles"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    app.add_option("-c,--config", config_path, "pipeline config (JSON)");
    app.add_option("-o,--out", out_dir, "output directory (overrides AEE_OUT_DIR and the config)");
    app.add_option("--seed", seed, "master seed");

    std::optional<std::size_t> gen_size;
    std::optional<std::size_t> gen_length;
    auto* gen = app.add_subcommand("gen", "generate the synthetic corpus");
    gen->add_option("--size", gen_size, "number of series");
    gen->add_option("--length", gen_length, "points per series");

    std::optional<int> epochs;
    auto* train = app.add_subcommand("train", "train the autoencoder");
    train->add_option("--epochs", epochs, "training epochs");

    std::optional<double> eps;
    auto* detect = app.add_subcommand("detect", "cluster latent codes and flag outliers");
    detect->add_option("--eps", eps, "DBSCAN radius (default: k-distance elbow)");

    std::string method = "gradcam";
    std::string target = "combined";
    std::vector<std::string> ids;
    auto* explain = app.add_subcommand("explain", "explain selected series with one method");
    explain->add_option("-m,--method", method, "gradcam | lime | shap | lrp | aee")->capture_default_str();
    explain->add_option("-t,--target", target, "combined | latent<i>")->capture_default_str();
    explain->add_option("--ids", ids, "series ids (comma separated or repeated)")->delimiter(',');

    auto* aee_cmd = app.add_subcommand("aee", "fuse stored explanations of the four methods");
    aee_cmd->add_option("-t,--target", target, "combined | latent<i>")->capture_default_str();
    aee_cmd->add_option("--ids", ids, "series ids (comma separated or repeated)")->delimiter(',');

    auto* qm = app.add_subcommand("qm", "perturbation-based quality measurement");
    qm->add_option("-m,--method", method, "gradcam | lime | shap | lrp | aee")->capture_default_str();

    std::string kind;
    std::string render_method = "aee";
    auto* render = app.add_subcommand("render", "write SVG figures");
    render->add_option("kind", kind, "heatmap | boxplot | scatter | reconstruction")->required();
    render->add_option("-m,--method", render_method, "method for heatmaps")->capture_default_str();
    render->add_option("--ids", ids, "series ids (comma separated or repeated)")->delimiter(',');

    auto* report = app.add_subcommand("report", "assemble report.json and report.md");
    auto* show = app.add_subcommand("config", "print the effective config");

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = config_path.empty() ? aee::PipelineConfig::defaults()
                                       : aee::load_pipeline_config(config_path);
        if (const char* env = std::getenv("AEE_OUT_DIR"); env && *env) cfg.paths.out_dir = env;
        if (!out_dir.empty()) cfg.paths.out_dir = out_dir;
        if (seed) cfg.seed = *seed;
        if (gen_size) cfg.generator.size = *gen_size;
        if (gen_length) cfg.generator.length = *gen_length;
        if (epochs) cfg.autoencoder.training.epochs = *epochs;
        if (eps) cfg.dbscan.eps = *eps;
        cfg.apply_seed();

        if (*show) {
            std::cout << aee::to_json(cfg).dump(2) << "\n";
            return 0;
        }

        aee::Pipeline pipeline(cfg);
        aee::CommandResult result;
        if (*gen) {
            result = pipeline.gen();
        } else if (*train) {
            result = pipeline.train();
        } else if (*detect) {
            result = pipeline.detect();
        } else if (*explain) {
            result = pipeline.explain(aee::parse_method(method), aee::parse_target(target), ids);
        } else if (*aee_cmd) {
            result = pipeline.aee(aee::parse_target(target), ids);
        } else if (*qm) {
            result = pipeline.qm(aee::parse_method(method));
        } else if (*render) {
            result = pipeline.render(aee::parse_render_kind(kind), aee::parse_method(render_method), ids);
        } else if (*report) {
            result = pipeline.report();
        }
        std::cout << result.command << ": " << result.artifacts.size() << " artifacts in "
                  << cfg.paths.out_dir.generic_string() << "\n";
        if (!result.summary.is_null()) std::cout << result.summary.dump() << "\n";
        return 0;
    } catch (const aee::Error& e) {
        std::cerr << "error [" << aee::to_string(e.category()) << "]: " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
