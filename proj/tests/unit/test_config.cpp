#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pointdc/config.hpp"

using namespace pointdc;

namespace {

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& tag, const std::string& content)
        : path(std::filesystem::temp_directory_path() /
               (tag + "_" + std::to_string(::getpid()) + ".cfg")) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("defaults hold with no file and no flags") {
    const RunConfig cfg = parse_config("", {});
    CHECK(cfg.det_tau == doctest::Approx(0.5));
    CHECK(cfg.det_lr == doctest::Approx(0.001));
    CHECK(cfg.det_batch == 32);
    CHECK(cfg.cls_lr == doctest::Approx(0.01));
    CHECK(cfg.cls_batch == 256);
    CHECK(cfg.det_epochs == 100);
    CHECK(cfg.eval_radius == doctest::Approx(6.0));
    CHECK(cfg.seed == 1);
    CHECK(cfg.scene.height == 64);
    CHECK(cfg.scene.classes == 3);
}

TEST_CASE("an empty config file keeps every default") {
    TempFile f("pointdc_cfg_empty", "\n# just a comment\n\n");
    const RunConfig cfg = parse_config(f.path.string(), {});
    CHECK(cfg.det_tau == doctest::Approx(0.5));
    CHECK(cfg.det_epochs == 100);
}

TEST_CASE("flags override file values") {
    TempFile f("pointdc_cfg_prec", "det.epochs = 10\ndet.lr = 0.5\n");
    const RunConfig file_only = parse_config(f.path.string(), {});
    CHECK(file_only.det_epochs == 10);
    CHECK(file_only.det_lr == doctest::Approx(0.5));

    const RunConfig merged = parse_config(f.path.string(), {{"det.epochs", "5"}});
    CHECK(merged.det_epochs == 5);               // flag wins
    CHECK(merged.det_lr == doctest::Approx(0.5));  // file survives elsewhere
}

TEST_CASE("unknown keys are rejected by name") {
    CHECK_THROWS_WITH_AS(parse_config("", {{"det.leraning_rate", "0.1"}}),
                         doctest::Contains("leraning_rate"), ConfigError);
    TempFile f("pointdc_cfg_unknown", "det.epchs = 10\n");
    CHECK_THROWS_AS(parse_config(f.path.string(), {}), ConfigError);
}

TEST_CASE("type errors are rejected") {
    CHECK_THROWS_AS(parse_config("", {{"det.epochs", "ten"}}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {{"det.lr", "fast"}}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {{"seed", "-3"}}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {{"det.epochs", "3.5"}}), ConfigError);
}

TEST_CASE("malformed file lines carry their line number") {
    TempFile f("pointdc_cfg_malformed", "det.epochs = 10\nthis line has no equals\n");
    CHECK_THROWS_WITH_AS(parse_config(f.path.string(), {}), doctest::Contains("2"),
                         ConfigError);
}

TEST_CASE("missing config file is an IO error") {
    CHECK_THROWS_AS(parse_config("/nonexistent/path.cfg", {}), IoError);
}

TEST_CASE("dump_config round-trips through parse") {
    RunConfig cfg = parse_config("", {{"det.lr", "0.003"},
                                      {"scene.noise", "0.05"},
                                      {"cls.mode", "full"},
                                      {"data.dir", "/tmp/somewhere"},
                                      {"seed", "42"}});
    TempFile f("pointdc_cfg_roundtrip", dump_config(cfg));
    const RunConfig back = parse_config(f.path.string(), {});
    CHECK(back.det_lr == doctest::Approx(0.003));
    CHECK(back.scene.noise == doctest::Approx(0.05));
    CHECK(back.cls_mode == "full");
    CHECK(back.data_dir == "/tmp/somewhere");
    CHECK(back.seed == 42);
    CHECK(dump_config(back) == dump_config(cfg));
}

TEST_CASE("every registered key survives a get/set round-trip") {
    RunConfig cfg;
    for (const auto& key : config_keys()) {
        const std::string v = get_config_value(cfg, key);
        RunConfig fresh;
        set_config_value(fresh, key, v);  // must accept its own dump format
        CHECK(get_config_value(fresh, key) == v);
    }
}

TEST_CASE("module configs inherit the top-level seed") {
    const RunConfig cfg = parse_config("", {{"seed", "77"}, {"det.lr", "0.25"}});
    CHECK(cfg.detector_config().seed == 77);
    CHECK(cfg.detector_config().lr == doctest::Approx(0.25));
    CHECK(cfg.joint_config().seed == 77);
    CHECK(cfg.classifier_config().seed == 77);
    CHECK(cfg.pretrain_config().seed == 77);
}

TEST_CASE("classifier config maps mode and supervision names") {
    const RunConfig a = parse_config("", {{"cls.mode", "linear"}, {"cls.supervision", "gt"}});
    CHECK(a.classifier_config().mode == ClsMode::Linear);
    CHECK(a.classifier_config().supervision == ClsSupervision::GroundTruth);
    const RunConfig b =
        parse_config("", {{"cls.mode", "full"}, {"cls.supervision", "detector"}});
    CHECK(b.classifier_config().mode == ClsMode::Full);
    CHECK(b.classifier_config().supervision == ClsSupervision::Detector);
    CHECK_THROWS_AS(parse_config("", {{"cls.mode", "frozen"}}).classifier_config(),
                    ConfigError);
}
