#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "aee/errors.hpp"
#include "aee/io.hpp"
#include "aee/pipeline.hpp"

using namespace aee;
namespace fs = std::filesystem;

namespace {

PipelineConfig tiny(const fs::path& dir) {
    auto c = PipelineConfig::defaults();
    c.paths.out_dir = dir;
    c.generator.size = 80;
    c.generator.length = 64;
    c.generator.nok_rate = 0.05;
    c.autoencoder.training.epochs = 2;
    c.explainer.methods.lime.segments = 8;
    c.explainer.methods.lime.samples = 40;
    c.explainer.methods.shap.segments = 8;
    c.explainer.methods.shap.samples = 40;
    c.explainer.max_instances = 2;
    c.qm.ok_instances = 5;
    c.apply_seed();
    return c;
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config json round trip and unknown keys") {
    const auto c = PipelineConfig::defaults();
    const auto j = to_json(c);
    CHECK(to_json(pipeline_config_from_json(j)) == j);

    auto bad = j;
    bad["extra"] = 1;
    CHECK_THROWS_AS(pipeline_config_from_json(bad), ParseError);
    bad = j;
    bad["qm"]["bogus"] = 1;
    CHECK_THROWS(pipeline_config_from_json(bad));
    bad = j;
    bad["generator"]["seed"] = 3;  // section seeds come from the master seed
    CHECK_THROWS(pipeline_config_from_json(bad));
    bad = j;
    bad["format_version"] = 99;
    CHECK_THROWS_AS(pipeline_config_from_json(bad), VersionError);
}

TEST_CASE("master seed drives the section seeds") {
    auto a = PipelineConfig::defaults();
    auto b = a;
    b.seed = 43;
    a.apply_seed();
    b.apply_seed();
    CHECK(a.generator.seed != b.generator.seed);
    CHECK(a.autoencoder.training.seed != b.autoencoder.training.seed);
    CHECK(a.qm.qm.perturbation.seed != b.qm.qm.perturbation.seed);
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("commands name their missing prerequisite") {
    const auto dir = fresh_dir("aee_test_prereq");
    Pipeline p(tiny(dir));
    try {
        p.detect();
        FAIL("detect without a dataset must fail");
    } catch (const MissingArtifact& e) {
        CHECK(e.producer() == "gen");
    }
    p.gen();
    try {
        p.detect();
        FAIL("detect without a model must fail");
    } catch (const MissingArtifact& e) {
        CHECK(e.producer() == "train");
    }
    fs::remove_all(dir);
}

TEST_CASE("cli exit code and message for detect before train") {
    const auto dir = fresh_dir("aee_test_cli");
    const std::string cli = AEE_CLI_PATH;
    const auto cfg = dir / "cfg.json";
    fs::create_directories(dir);
    {
        std::ofstream(cfg) << R"({"generator": {"size": 50, "length": 64}})";
    }
    const std::string base = "\"" + cli + "\" -c \"" + cfg.string() + "\" -o \"" + dir.string() + "\" ";
    REQUIRE(std::system((base + "gen > /dev/null").c_str()) == 0);
    const auto err = dir / "err.txt";
    const int status = std::system((base + "detect 2> \"" + err.string() + "\" > /dev/null").c_str());
    CHECK(WEXITSTATUS(status) == 11);
    CHECK(read_text(err).find("train") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("tiny end to end run produces every render kind") {
    const auto dir = fresh_dir("aee_test_e2e");
    Pipeline p(tiny(dir));
    p.gen();
    p.train();
    p.detect();
    for (Method m : kBaseMethods) p.explain(m, Target::all());
    p.aee(Target::all());
    p.qm(Method::gradcam);
    for (auto k : {RenderKind::heatmap, RenderKind::boxplot, RenderKind::scatter, RenderKind::reconstruction}) {
        const auto r = p.render(k, k == RenderKind::boxplot ? Method::gradcam : Method::aee);
        CHECK_FALSE(r.artifacts.empty());
        for (const auto& a : r.artifacts) CHECK(fs::exists(a));
    }
    const auto rep = p.report();
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "report.md"));
    const auto manifest = nlohmann::json::parse(read_text(dir / "manifest_train.json"));
    for (const auto& a : manifest["artifacts"]) CHECK(fs::exists(dir / a.get<std::string>()));
    fs::remove_all(dir);
}

}  // TEST_SUITE
