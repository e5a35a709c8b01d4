#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "voltcast/errors.hpp"
#include "voltcast/pipeline/config.hpp"
#include "voltcast/pipeline/plot.hpp"
#include "voltcast/pipeline/runner.hpp"
#include "voltcast/pipeline/synth.hpp"

using namespace voltcast;
using namespace voltcast::pipeline;

namespace fs = std::filesystem;

namespace {

std::string minimal_config(const std::string& extra = "") {
    return R"({
      "seed": 7,
      "data": {"prices_csv": "p.csv", "exogenous_csv": "e.csv"},
      "split": {"train_end": "2010-04-06", "validation_end": "2010-06-05"})" +
           extra + "\n}";
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config validation") {
    SUBCASE("minimal config parses with defaults") {
        const auto cfg = PipelineConfig::from_json_text(minimal_config(), "");
        CHECK(cfg.seed == 7);
        CHECK(cfg.slots_per_day == 48);
        CHECK(cfg.sfs_budget == 30);
        CHECK(cfg.refit_every == 20);
        CHECK(cfg.dm_significance == 0.10);
        CHECK(cfg.segment_size == 50);
        // every ablation toggle defaults to enabled
        for (const auto& name : AblationToggles::valid_names()) CHECK(cfg.ablation.get(name));
    }
    SUBCASE("missing seed is rejected") {
        CHECK_THROWS_AS(PipelineConfig::from_json_text(
                            R"({"split": {"train_end": "2010-01-01",
                                "validation_end": "2010-02-01"}})",
                            ""),
                        ConfigError);
    }
    SUBCASE("test span before the training span is rejected before any stage runs") {
        const std::string bad = R"({
          "seed": 7,
          "split": {"train_end": "2010-06-05", "validation_end": "2010-04-06"}})";
        CHECK_THROWS_AS(PipelineConfig::from_json_text(bad, ""), ConfigError);
    }
    SUBCASE("invalid JSON is a config error") {
        CHECK_THROWS_AS(PipelineConfig::from_json_text("{not json", ""), ConfigError);
    }
    SUBCASE("unknown toggle names are rejected with the valid list") {
        AblationToggles t;
        CHECK_THROWS_WITH_AS(t.set("warp_drive", false), doctest::Contains("valid toggles"),
                             ConfigError);
        CHECK_NOTHROW(t.set("weather", false));
        CHECK(t.disabled_feature_groups().count("weather") == 1);
    }
    SUBCASE("relative paths resolve against the config directory") {
        const auto cfg = PipelineConfig::from_json_text(minimal_config(), "/base/dir");
        CHECK(cfg.prices_csv == "/base/dir/p.csv");
    }
    SUBCASE("config hash is stable and sensitive") {
        const auto a = PipelineConfig::from_json_text(minimal_config(), "");
        const auto b = PipelineConfig::from_json_text(minimal_config(), "");
        CHECK(a.config_hash() == b.config_hash());
        auto c = a;
        c.seed = 8;
        CHECK(a.config_hash() != c.config_hash());
    }
}

TEST_CASE("synthetic fixture generates a runnable data set") {
    TempDir tmp("voltcast_synth_test");
    SynthOptions opts;
    opts.n_days = 80;
    opts.train_days = 50;
    opts.validation_days = 15;
    const auto result = generate_fixture(tmp.path.string(), opts);
    CHECK(fs::exists(result.prices_csv));
    CHECK(fs::exists(result.exogenous_csv));
    CHECK(fs::is_directory(result.corpus_dir));
    CHECK(fs::exists(result.config_path));

    const auto cfg = PipelineConfig::from_json_file(result.config_path);
    CHECK(cfg.slots_per_day == 48);
    CHECK(cfg.prices_csv == result.prices_csv);

    // count data rows in the prices CSV: n_days * 48
    std::ifstream in(result.prices_csv);
    std::string line;
    int rows = -1;  // header
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 80 * 48);
}

TEST_CASE("pipeline stages run, persist and resume on a small fixture") {
    TempDir tmp("voltcast_stage_test");
    SynthOptions opts;
    opts.n_days = 120;
    opts.train_days = 80;
    opts.validation_days = 20;
    const auto fixture = generate_fixture(tmp.path.string(), opts);
    auto cfg = PipelineConfig::from_json_file(fixture.config_path);
    cfg.out_dir = (tmp.path / "out").string();

    {
        Runner runner(cfg, false, true);
        runner.ensure_features();
        CHECK(fs::exists(tmp.path / "out/cleaned_panel.csv"));
        CHECK(fs::exists(tmp.path / "out/cleaning_report.json"));
        CHECK(fs::exists(tmp.path / "out/measures.csv"));
        CHECK(fs::exists(tmp.path / "out/ratings.jsonl"));
        CHECK(fs::exists(tmp.path / "out/features.csv"));
        CHECK(fs::exists(tmp.path / "out/features_meta.json"));
        CHECK(fs::exists(tmp.path / "out/features_reduced.csv"));

        CHECK(runner.ratings().size() == 1);  // 120 days within one year
        CHECK(runner.raw_matrix().col_index("cv_d") >= 0);
        CHECK(runner.raw_matrix().col_index("weather_rating") >= 0);
        CHECK(runner.reduced_matrix().n_rows() == runner.raw_matrix().n_rows());

        // manifest needs a full run; write one manually for the resume check
        const auto manifest = runner.manifest();
        std::ofstream(tmp.path / "out/manifest.json") << manifest.to_json();
        CHECK(manifest.artifacts.size() >= 7);
        // every artifact listed exactly once
        std::set<std::string> seen;
        for (const auto& a : manifest.artifacts) CHECK(seen.insert(a.path).second);
    }

    SUBCASE("an identical config resumes from the persisted artifacts") {
        Runner runner(cfg, true, true);
        runner.ensure_features();
        const auto manifest = runner.manifest();
        int reused = 0;
        for (const auto& t : manifest.timings)
            if (t.reused) ++reused;
        CHECK(reused == 4);  // ingest, measures, rate, features
    }

    SUBCASE("a changed config invalidates reuse") {
        auto changed = cfg;
        changed.seed = cfg.seed + 1;
        Runner runner(changed, true, true);
        runner.ensure_measures();
        for (const auto& t : runner.manifest().timings) CHECK_FALSE(t.reused);
    }
}

TEST_CASE("plot SVGs carry the expected structure") {
    std::vector<eval::ForecastRecord> records;
    Date d = parse_date("2017-07-03");
    for (int i = 0; i < 30; ++i) {
        records.push_back({d, "ensemble", 1.0 + 0.1 * i, 1.1 + 0.1 * i});
        d = d.next();
    }
    const std::string chart = forecast_chart_svg("ensemble", records);
    CHECK(chart.find("<svg") != std::string::npos);
    CHECK(chart.find("polyline") != std::string::npos);
    CHECK(chart.find("ensemble") != std::string::npos);

    eval::RejectionHeatmap hm;
    hm.models = {"ensemble", "garch"};
    hm.counts = {{0, 32}, {3, 0}};
    hm.segments = 50;
    hm.segment_size = 50;
    const std::string svg = heatmap_svg(hm);
    CHECK(svg.find(">32/50<") != std::string::npos);  // the cell-label format
    CHECK(svg.find(">0/50<") != std::string::npos);
    CHECK(svg.find("garch") != std::string::npos);

    CHECK_THROWS_AS(forecast_chart_svg("empty", {}), DataError);
}

TEST_CASE("stage dispatch rejects unknown stages") {
    TempDir tmp("voltcast_dispatch_test");
    SynthOptions opts;
    opts.n_days = 60;
    opts.train_days = 40;
    opts.validation_days = 10;
    const auto fixture = generate_fixture(tmp.path.string(), opts);
    auto cfg = PipelineConfig::from_json_file(fixture.config_path);
    cfg.out_dir = (tmp.path / "out").string();
    Runner runner(cfg, false, true);
    CHECK_THROWS_AS(runner.run_stage("quantify"), ConfigError);
}
