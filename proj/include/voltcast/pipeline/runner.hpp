#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "voltcast/evaluation.hpp"
#include "voltcast/feature_matrix.hpp"
#include "voltcast/market_data.hpp"
#include "voltcast/pipeline/config.hpp"
#include "voltcast/rag/scoring.hpp"
#include "voltcast/realized_measures.hpp"

namespace voltcast::pipeline {

struct ArtifactEntry {
    std::string path;  // relative to out_dir
    std::string stage;
    uint64_t bytes = 0;
    std::string hash;  // fnv-1a of file contents
};

struct StageTiming {
    std::string stage;
    double elapsed_ms = 0.0;
    bool reused = false;
};

struct RunManifest {
    std::string config_hash;
    uint64_t seed = 0;
    std::vector<ArtifactEntry> artifacts;  // every emitted file exactly once
    std::vector<StageTiming> timings;
    std::map<std::string, std::string> versions;

    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
};

/// Executes the staged pipeline:
///   ingest -> measures -> rate -> features -> fit -> backtest -> evaluate -> plot
/// Each stage persists its artifacts under the config's out_dir; with resume
/// enabled, a stage whose artifacts exist under an identical config hash is
/// loaded from disk instead of recomputed.
class Runner {
public:
    Runner(PipelineConfig cfg, bool resume = false, bool offline = false);

    RunManifest run();

    // Individual stages (each ensures its dependencies first).
    void ensure_ingest();
    void ensure_measures();
    void ensure_rate();
    void ensure_features();
    void ensure_fit();
    void ensure_backtest();
    void ensure_evaluate();
    void ensure_plot();
    void run_stage(const std::string& name);

    RunManifest manifest() const;
    const PipelineConfig& config() const { return cfg_; }

    // In-memory results (populated once the corresponding stage ran).
    const std::vector<eval::ForecastRecord>& records() const { return records_; }
    const std::vector<eval::MetricReport>& metric_reports() const { return metric_reports_; }
    const FeatureMatrix& raw_matrix() const { return matrix_; }
    const FeatureMatrix& reduced_matrix() const { return reduced_; }
    const std::vector<rag::WeatherRating>& ratings() const { return ratings_; }

private:
    bool can_reuse(const std::string& stage, const std::vector<std::string>& outputs);
    void note_artifact(const std::string& stage, const std::string& rel_path);
    void note_timing(const std::string& stage, double ms, bool reused);
    std::string out_path(const std::string& rel) const;
    void write_text_artifact(const std::string& stage, const std::string& rel,
                             const std::string& content);

    std::vector<int> rows_between(std::optional<Date> after, std::optional<Date> upto) const;

    PipelineConfig cfg_;
    bool resume_ = false;
    std::optional<RunManifest> previous_;

    // stage state
    bool have_ingest_ = false, have_measures_ = false, have_rate_ = false,
         have_features_ = false, have_fit_ = false, have_backtest_ = false,
         have_evaluate_ = false, have_plot_ = false;

    IntradayPriceSeries series_;
    CleaningReport cleaning_report_;
    std::vector<DailyRealizedMeasures> measures_;
    std::vector<rag::WeatherRating> ratings_;
    FeatureMatrix matrix_;    // raw assembled matrix
    FeatureMatrix reduced_;   // post SFS/KPCA
    std::vector<eval::ForecastRecord> records_;
    std::vector<eval::MetricReport> metric_reports_;
    eval::RejectionHeatmap heatmap_;
    bool heatmap_available_ = false;

    std::vector<ArtifactEntry> artifacts_;
    std::vector<StageTiming> timings_;
};

/// Reruns the pipeline once per toggle (disabled) in out subdirectories keyed
/// by toggle name and reports ensemble metric deltas against the base run.
/// Returns the plain-text comparison table.
std::string run_ablation(const PipelineConfig& base, const std::vector<std::string>& toggles,
                         bool offline);

}  // namespace voltcast::pipeline
