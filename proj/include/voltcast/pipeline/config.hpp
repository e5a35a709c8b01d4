#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "voltcast/calendar.hpp"
#include "voltcast/models/ensemble.hpp"
#include "voltcast/rag/scoring.hpp"

namespace voltcast::pipeline {

/// Component/feature toggles; every toggle defaults to enabled. Each maps to
/// one ablation-study row.
struct AblationToggles {
    bool weather = true;
    bool supply_demand = true;
    bool price_fluctuations = true;
    bool regional = true;
    bool rating = true;
    bool llm_features = true;  // skips the rating stage entirely
    bool lstm = true;
    bool gbt = true;

    static const std::vector<std::string>& valid_names();
    void set(const std::string& name, bool value);
    bool get(const std::string& name) const;
    /// Feature groups the assemble step must drop.
    std::set<std::string> disabled_feature_groups() const;
};

struct PipelineConfig {
    // data
    std::string prices_csv;
    std::string exogenous_csv;
    std::string weather_corpus_dir;
    int slots_per_day = 48;
    bool allow_partial_final_day = false;
    bool pad_incomplete_days = false;

    // split: train <= train_end < validation <= validation_end < test
    Date train_end;
    Date validation_end;

    double jump_alpha = 0.01;

    // features
    std::string target = "rv";
    bool sfs_enabled = true;
    int sfs_budget = 30;
    double sfs_ridge_lambda = 1e-3;
    bool kpca_enabled = true;
    std::string kpca_kernel = "rbf";
    double kpca_gamma = 0.0;
    double kpca_variance_explained = 0.95;
    int kpca_components = 0;  // 0 = choose by variance_explained
    bool kpca_augment = false;  // keep selected columns alongside components

    // models
    models::GbtParams gbt;
    models::LstmParams lstm;
    int garch_max_fevals = 20000;
    double ensemble_val_fraction = 0.15;

    // backtest
    int refit_every = 20;
    std::vector<std::string> backtest_models = {"ensemble", "har_cj", "harq_cj", "garch"};

    // evaluation
    double dm_significance = 0.10;
    int segment_size = 50;
    int newey_west_lags = 0;
    bool dm_small_sample = false;

    AblationToggles ablation;

    // rating
    rag::ProviderConfig provider;
    int rating_top_k = 4;
    std::string prompt_template_path;  // empty = built-in v1 template
    std::string rating_period_mode = "annual";  // or "monthly"
    size_t chunk_size = 1000;
    size_t chunk_overlap = 200;

    uint64_t seed = 42;
    bool seed_present = false;
    std::string out_dir = "out";

    /// Reads a JSON config; relative data paths resolve against the config
    /// file's directory.
    static PipelineConfig from_json_file(const std::string& path);
    static PipelineConfig from_json_text(const std::string& text, const std::string& base_dir);

    std::string to_json() const;
    void validate() const;
    uint64_t config_hash() const;
};

}  // namespace voltcast::pipeline
