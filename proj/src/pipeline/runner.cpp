#include "voltcast/pipeline/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "voltcast/csv.hpp"
#include "voltcast/errors.hpp"
#include "voltcast/kpca.hpp"
#include "voltcast/models/ensemble.hpp"
#include "voltcast/models/garch.hpp"
#include "voltcast/models/har.hpp"
#include "voltcast/pipeline/plot.hpp"
#include "voltcast/selection.hpp"
#include "voltcast/stats.hpp"

namespace voltcast::pipeline {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void write_file(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    return seed ^ (salt * 0x9e3779b97f4a7c15ULL + 0x1234567);
}

// ---------------------------------------------------------------------------
// Backtest forecaster adapters
// ---------------------------------------------------------------------------
class HarForecaster final : public eval::Forecaster {
public:
    explicit HarForecaster(models::HarVariant variant) : variant_(variant) {}
    std::string name() const override { return models::to_string(variant_); }

    void fit(const eval::BacktestDataset& data, int end_row) override {
        std::vector<int> rows;
        for (int r : data.raw.usable_rows())
            if (r < end_row) rows.push_back(r);
        model_ = models::fit_har(data.raw, rows, variant_);
    }

    double predict_row(const eval::BacktestDataset& data, int row) override {
        return models::har_predict(model_, data.raw, {row})[0];
    }

private:
    models::HarVariant variant_;
    models::HarModel model_;
};

class GarchForecaster final : public eval::Forecaster {
public:
    GarchForecaster(int max_fevals, TargetSpec target)
        : max_fevals_(max_fevals), target_(target) {}
    std::string name() const override { return "garch"; }

    void fit(const eval::BacktestDataset& data, int end_row) override {
        std::vector<double> window(data.daily_returns.values.begin(),
                                   data.daily_returns.values.begin() + end_row);
        models::GarchFitOptions opts;
        opts.max_fevals = max_fevals_;
        model_ = models::fit_garch(window, opts);
        std::vector<double> clean;
        for (double r : window)
            if (!std::isnan(r)) clean.push_back(r - model_.mean);
        sigma2_0_ = std::max(sample_variance(clean), 1e-12);
    }

    double predict_row(const eval::BacktestDataset& data, int row) override {
        // Filter the variance recursion through every return known at row's day.
        double sigma2 = sigma2_0_;
        double prev_eps2 = 0.0;
        bool first = true;
        for (int i = 0; i <= row && i < int(data.daily_returns.values.size()); ++i) {
            const double r = data.daily_returns.values[i];
            if (std::isnan(r)) continue;
            if (!first) sigma2 = model_.omega + model_.alpha * prev_eps2 + model_.beta * sigma2;
            const double eps = r - model_.mean;
            prev_eps2 = eps * eps;
            first = false;
        }
        const double forecast = model_.omega + model_.alpha * prev_eps2 + model_.beta * sigma2;
        switch (target_) {
            case TargetSpec::Levels: return forecast;
            case TargetSpec::Sqrt: return std::sqrt(forecast);
            case TargetSpec::Log: return std::log(std::max(forecast, 1e-300));
        }
        return forecast;
    }

private:
    int max_fevals_;
    TargetSpec target_;
    models::GarchModel model_;
    double sigma2_0_ = 0.0;
};

class EnsembleForecaster final : public eval::Forecaster {
public:
    EnsembleForecaster(models::EnsembleParams params, double val_fraction, uint64_t seed)
        : params_(std::move(params)), val_fraction_(val_fraction), seed_(seed) {}
    std::string name() const override { return "ensemble"; }

    void fit(const eval::BacktestDataset& data, int end_row) override {
        std::vector<int> rows;
        for (int r : data.reduced.usable_rows())
            if (r < end_row) rows.push_back(r);
        if (rows.size() < 30) throw ModelError("ensemble backtest window is too small");

        int n_val = int(std::lround(val_fraction_ * double(rows.size())));
        n_val = std::max(5, std::min(n_val, int(rows.size()) / 3));
        const std::vector<int> train(rows.begin(), rows.end() - n_val);
        const std::vector<int> val(rows.end() - n_val, rows.end());

        models::EnsembleParams p = params_;
        p.gbt.seed = mix_seed(seed_, uint64_t(end_row));
        p.lstm.seed = mix_seed(seed_, uint64_t(end_row) + 7919);
        model_ = models::fit_ensemble(data.reduced, train, val, p);
    }

    double predict_row(const eval::BacktestDataset& data, int row) override {
        return models::ensemble_predict(model_, data.reduced, {row})[0];
    }

    bool can_score(const eval::BacktestDataset& data, int row) const override {
        if (!data.raw.usable[row]) return false;
        if (!params_.use_lstm) return true;
        return !models::sequence_ready_rows(data.reduced, params_.lstm.seq_len, {row}).empty();
    }

private:
    models::EnsembleParams params_;
    double val_fraction_;
    uint64_t seed_;
    models::EnsembleModel model_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------
std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["versions"] = versions;
    auto& arts = j["artifacts"] = nlohmann::json::array();
    for (const auto& a : artifacts)
        arts.push_back(
            {{"path", a.path}, {"stage", a.stage}, {"bytes", a.bytes}, {"hash", a.hash}});
    auto& times = j["timings"] = nlohmann::json::array();
    for (const auto& t : timings)
        times.push_back({{"stage", t.stage}, {"elapsed_ms", t.elapsed_ms}, {"reused", t.reused}});
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    RunManifest m;
    m.config_hash = j.at("config_hash");
    m.seed = j.at("seed");
    if (j.contains("versions"))
        m.versions = j.at("versions").get<std::map<std::string, std::string>>();
    for (const auto& a : j.at("artifacts"))
        m.artifacts.push_back(
            {a.at("path"), a.at("stage"), a.at("bytes").get<uint64_t>(), a.at("hash")});
    for (const auto& t : j.at("timings"))
        m.timings.push_back(
            {t.at("stage"), t.at("elapsed_ms").get<double>(), t.at("reused").get<bool>()});
    return m;
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------
Runner::Runner(PipelineConfig cfg, bool resume, bool offline)
    : cfg_(std::move(cfg)), resume_(resume) {
    if (offline) cfg_.provider.kind = rag::ProviderConfig::Kind::OfflineMock;
    cfg_.validate();
    fs::create_directories(cfg_.out_dir);
    if (resume_) {
        const std::string manifest_path = out_path("manifest.json");
        if (fs::exists(manifest_path)) {
            try {
                previous_ = RunManifest::from_json(read_file(manifest_path));
            } catch (...) {
                previous_.reset();  // unreadable manifest disables reuse
            }
        }
    }
}

std::string Runner::out_path(const std::string& rel) const {
    return (fs::path(cfg_.out_dir) / rel).string();
}

bool Runner::can_reuse(const std::string& stage, const std::vector<std::string>& outputs) {
    if (!resume_ || !previous_) return false;
    if (previous_->config_hash != hex64(cfg_.config_hash())) return false;
    for (const auto& rel : outputs) {
        bool ok = false;
        for (const auto& a : previous_->artifacts) {
            if (a.path != rel || a.stage != stage) continue;
            const std::string full = out_path(rel);
            if (fs::exists(full) && hex64(fnv1a64(read_file(full))) == a.hash) ok = true;
            break;
        }
        if (!ok) return false;
    }
    return true;
}

void Runner::note_artifact(const std::string& stage, const std::string& rel) {
    const std::string content = read_file(out_path(rel));
    artifacts_.push_back({rel, stage, content.size(), hex64(fnv1a64(content))});
}

void Runner::write_text_artifact(const std::string& stage, const std::string& rel,
                                 const std::string& content) {
    write_file(out_path(rel), content);
    artifacts_.push_back({rel, stage, content.size(), hex64(fnv1a64(content))});
}

void Runner::note_timing(const std::string& stage, double ms, bool reused) {
    timings_.push_back({stage, ms, reused});
    uint64_t combined = 0xcbf29ce484222325ULL;
    for (const auto& a : artifacts_)
        if (a.stage == stage) combined = fnv1a64(hex64(combined) + a.hash);
    std::fprintf(stderr, "[voltcast] stage=%s elapsed_ms=%.1f reused=%d artifacts=%s\n",
                 stage.c_str(), ms, reused ? 1 : 0, hex64(combined).c_str());
}

std::vector<int> Runner::rows_between(std::optional<Date> after, std::optional<Date> upto) const {
    std::vector<int> rows;
    for (int r : matrix_.usable_rows()) {
        const Date d = matrix_.days[r];
        if (after && !(d > *after)) continue;
        if (upto && !(d <= *upto)) continue;
        rows.push_back(r);
    }
    return rows;
}

void Runner::ensure_ingest() {
    if (have_ingest_) return;
    const auto start = Clock::now();
    const std::vector<std::string> outputs = {"cleaned_panel.csv", "cleaning_report.json"};

    CsvSchema schema;
    schema.slots_per_day = cfg_.slots_per_day;
    schema.allow_partial_final_day = cfg_.allow_partial_final_day;
    schema.pad_incomplete_days = cfg_.pad_incomplete_days;

    const bool reused = can_reuse("ingest", outputs);
    if (reused) {
        std::ifstream in(out_path("cleaned_panel.csv"));
        series_ = ingest_csv(in, schema);
        cleaning_report_ = CleaningReport{};
        for (const auto& rel : outputs) note_artifact("ingest", rel);
    } else {
        if (cfg_.prices_csv.empty()) throw ConfigError("config must set data.prices_csv");
        std::ifstream in(cfg_.prices_csv);
        if (!in) throw DataError("cannot open prices CSV '" + cfg_.prices_csv + "'");
        IntradayPriceSeries raw = ingest_csv(in, schema);
        auto [cleaned, report] = clean_nonpositive(raw);
        series_ = std::move(cleaned);
        cleaning_report_ = std::move(report);

        std::ostringstream panel;
        write_cleaned_csv(panel, series_, cleaning_report_, schema);
        write_text_artifact("ingest", "cleaned_panel.csv", panel.str());
        write_text_artifact("ingest", "cleaning_report.json", cleaning_report_.to_json());
    }
    have_ingest_ = true;
    note_timing("ingest", ms_since(start), reused);
}

void Runner::ensure_measures() {
    if (have_measures_) return;
    ensure_ingest();
    const auto start = Clock::now();
    const std::vector<std::string> outputs = {"measures.csv"};

    const bool reused = can_reuse("measures", outputs);
    if (reused) {
        std::ifstream in(out_path("measures.csv"));
        measures_ = read_measures_csv(in);
        note_artifact("measures", "measures.csv");
    } else {
        const ReturnPanel returns = intraday_returns(series_);
        // Seasonal profile from the training split only (no look-ahead).
        const SeasonalProfile profile =
            seasonal_profile(returns, series_.days.front(), cfg_.train_end);
        DemeanLog log;
        const ReturnPanel demeaned = demean(returns, profile, &log);
        if (log.missing_cells > 0)
            std::fprintf(stderr, "[voltcast] demean: %d cells had no profile entry\n",
                         log.missing_cells);
        measures_ = compute_daily_measures(demeaned, JumpTestConfig::from_alpha(cfg_.jump_alpha));
        std::ostringstream out;
        write_measures_csv(out, measures_);
        write_text_artifact("measures", "measures.csv", out.str());
    }
    have_measures_ = true;
    note_timing("measures", ms_since(start), reused);
}

void Runner::ensure_rate() {
    if (have_rate_) return;
    ensure_ingest();
    const auto start = Clock::now();

    std::vector<std::string> outputs = {"ratings.jsonl"};
    const bool llm_on = cfg_.ablation.llm_features && !cfg_.weather_corpus_dir.empty();
    if (llm_on) outputs.push_back("rating_cache.jsonl");

    const bool reused = can_reuse("rate", outputs);
    if (reused) {
        std::ifstream in(out_path("ratings.jsonl"));
        ratings_ = rag::read_ratings_jsonl(in);
        for (const auto& rel : outputs) note_artifact("rate", rel);
    } else {
        ratings_.clear();
        if (llm_on) {
            const rag::Corpus corpus = rag::load_corpus_dir(cfg_.weather_corpus_dir);
            const rag::NgramHashEmbedder embedder;
            const rag::RetrievalIndex index =
                rag::index_corpus(corpus, embedder, cfg_.chunk_size, cfg_.chunk_overlap);
            auto provider = rag::make_provider(cfg_.provider);

            std::string prompt_template = rag::kWeatherPromptV1;
            if (!cfg_.prompt_template_path.empty())
                prompt_template = read_file(cfg_.prompt_template_path);

            // Periods: spans of the panel that the corpus covers.
            std::vector<rag::RatingPeriod> periods;
            std::set<std::pair<int, int>> seen;
            for (const Date& d : series_.days) {
                const int month = cfg_.rating_period_mode == "monthly" ? d.month() : 0;
                if (!corpus.reports.count(d.year())) continue;
                if (seen.insert({d.year(), month}).second) periods.push_back({d.year(), month});
            }
            rag::RatingCache cache(out_path("rating_cache.jsonl"));
            const int parallelism =
                cfg_.provider.kind == rag::ProviderConfig::Kind::Remote ? cfg_.provider.parallelism
                                                                        : 1;
            ratings_ = rag::score_periods(periods, index, embedder, *provider, prompt_template,
                                          cfg_.rating_top_k, &cache, parallelism);
        }
        std::ostringstream out;
        rag::write_ratings_jsonl(out, ratings_);
        write_text_artifact("rate", "ratings.jsonl", out.str());
        if (llm_on) note_artifact("rate", "rating_cache.jsonl");
    }
    have_rate_ = true;
    note_timing("rate", ms_since(start), reused);
}

void Runner::ensure_features() {
    if (have_features_) return;
    ensure_measures();
    ensure_rate();
    const auto start = Clock::now();
    const std::vector<std::string> outputs = {"features.csv", "features_meta.json",
                                              "features_reduced.csv"};

    const bool reused = can_reuse("features", outputs);
    if (reused) {
        std::ifstream raw_in(out_path("features.csv"));
        matrix_ = read_feature_csv(raw_in);
        std::ifstream red_in(out_path("features_reduced.csv"));
        reduced_ = read_feature_csv(red_in);
        for (const auto& rel : outputs) note_artifact("features", rel);
    } else {
        if (cfg_.exogenous_csv.empty()) throw ConfigError("config must set data.exogenous_csv");
        std::ifstream exog_in(cfg_.exogenous_csv);
        if (!exog_in) throw DataError("cannot open exogenous CSV '" + cfg_.exogenous_csv + "'");
        ExogenousTable exog = read_exogenous_csv(exog_in);

        // Daily means of price-panel passthrough columns stand in for missing
        // supply/demand columns.
        const std::pair<const char*, const char*> fallbacks[] = {{"demand", "demand_mw"},
                                                                 {"supply", "supply_mw"}};
        for (const auto& [src, dst] : fallbacks) {
            if (exog.col_index(dst) >= 0) continue;
            const DailySeries daily = daily_mean_passthrough(series_, src);
            if (daily.days.empty()) continue;
            std::map<int32_t, double> by_day;
            for (size_t i = 0; i < daily.days.size(); ++i)
                by_day[daily.days[i].days] = daily.values[i];
            FeatureColumn col{dst, "MW", kGroupSupplyDemand, {}};
            for (const Date& d : exog.days) {
                auto it = by_day.find(d.days);
                col.values.push_back(it == by_day.end()
                                         ? std::numeric_limits<double>::quiet_NaN()
                                         : it->second);
            }
            exog.columns.push_back(std::move(col));
        }

        // Rating column from the rate stage (overrides any CSV column).
        if (!ratings_.empty()) {
            const std::vector<double> col = rag::ratings_to_feature(ratings_, exog.days);
            const int existing = exog.col_index("weather_rating");
            if (existing >= 0)
                exog.columns[existing].values = col;
            else
                exog.columns.push_back({"weather_rating", "score", kGroupRating, col});
        }

        AssembleOptions opts;
        opts.target = target_spec_from_string(cfg_.target);
        opts.daily_returns = daily_close_returns(series_);
        // The raw matrix keeps every group: the HAR/HARQ baselines always read
        // their canonical columns. Ablation toggles shape only the hybrid
        // model's feature set below.
        matrix_ = assemble(measures_, exog, opts);

        AssembleOptions ablated = opts;
        ablated.disabled_groups = cfg_.ablation.disabled_feature_groups();
        const FeatureMatrix ensemble_input =
            ablated.disabled_groups.empty() ? matrix_ : assemble(measures_, exog, ablated);

        // Split rows for selection/reduction.
        std::vector<int> train_rows, val_rows;
        for (int r : ensemble_input.usable_rows()) {
            const Date d = ensemble_input.days[r];
            if (d <= cfg_.train_end) train_rows.push_back(r);
            else if (d <= cfg_.validation_end) val_rows.push_back(r);
        }
        if (train_rows.empty() || val_rows.empty())
            throw DataError("train/validation splits are empty; check split dates");

        const Standardization standardization = fit_standardization(ensemble_input, train_rows);
        const FeatureMatrix standardized = apply_standardization(ensemble_input, standardization);

        std::vector<std::string> selected = standardized.column_names();
        SelectionResult selection;
        if (cfg_.sfs_enabled && int(standardized.columns.size()) > 1) {
            SfsOptions sfs;
            sfs.budget = cfg_.sfs_budget;
            sfs.ridge_lambda = cfg_.sfs_ridge_lambda;
            selection = forward_sequential_selection(standardized, train_rows, val_rows, sfs);
            if (!selection.selected.empty()) selected = selection.selected;
        }
        const FeatureMatrix picked = select_columns(standardized, selected);

        if (cfg_.kpca_enabled) {
            const KernelSpec kernel = KernelSpec::from_string(cfg_.kpca_kernel, cfg_.kpca_gamma);
            const Eigen::MatrixXd train_x = picked.dense(train_rows);
            const KpcaModel kpca = kpca_fit(train_x, kernel, cfg_.kpca_components,
                                            cfg_.kpca_variance_explained);
            std::vector<int> all_rows(picked.n_rows());
            for (size_t i = 0; i < picked.n_rows(); ++i) all_rows[i] = int(i);
            const Eigen::MatrixXd projected =
                kpca_transform_matrix(kpca, picked.dense(all_rows));

            reduced_ = FeatureMatrix{};
            reduced_.days = picked.days;
            reduced_.target_name = picked.target_name;
            reduced_.target = picked.target;
            reduced_.usable = picked.usable;
            if (cfg_.kpca_augment) reduced_.columns = picked.columns;
            for (int a = 0; a < kpca.n_components; ++a) {
                FeatureColumn col{"pc_" + std::to_string(a + 1), "", "reduced", {}};
                col.values.resize(picked.n_rows());
                for (size_t i = 0; i < picked.n_rows(); ++i) col.values[i] = projected(i, a);
                reduced_.columns.push_back(std::move(col));
            }
        } else {
            reduced_ = picked;
        }

        std::ostringstream raw_out;
        write_feature_csv(raw_out, matrix_);
        write_text_artifact("features", "features.csv", raw_out.str());

        nlohmann::json meta = nlohmann::json::parse(feature_sidecar_json(matrix_, &standardization));
        meta["selection"] = {{"enabled", cfg_.sfs_enabled},
                             {"selected", selected},
                             {"scores", selection.scores},
                             {"budget", cfg_.sfs_budget}};
        meta["kpca"] = {{"enabled", cfg_.kpca_enabled},
                        {"components", int(reduced_.columns.size())}};
        write_text_artifact("features", "features_meta.json", meta.dump(2) + "\n");

        std::ostringstream red_out;
        write_feature_csv(red_out, reduced_);
        write_text_artifact("features", "features_reduced.csv", red_out.str());
    }
    have_features_ = true;
    note_timing("features", ms_since(start), reused);
}

namespace {

models::EnsembleParams ensemble_params_from(const PipelineConfig& cfg) {
    models::EnsembleParams p;
    p.gbt = cfg.gbt;
    p.lstm = cfg.lstm;
    p.use_gbt = cfg.ablation.gbt;
    p.use_lstm = cfg.ablation.lstm;
    return p;
}

}  // namespace

void Runner::ensure_fit() {
    if (have_fit_) return;
    ensure_features();
    const auto start = Clock::now();

    std::vector<std::string> outputs;
    for (const auto& name : cfg_.backtest_models) outputs.push_back("models/" + name + ".json");

    const bool reused = can_reuse("fit", outputs);
    if (reused) {
        for (const auto& rel : outputs) note_artifact("fit", rel);
    } else {
        const eval::BacktestDataset data{matrix_, reduced_, daily_close_returns(series_)};
        const std::vector<int> fit_rows = rows_between(std::nullopt, cfg_.validation_end);
        if (fit_rows.empty()) throw DataError("no usable rows up to validation_end");
        const int end_row = fit_rows.back() + 1;

        for (const auto& name : cfg_.backtest_models) {
            std::string doc;
            if (name == "ensemble") {
                EnsembleForecaster f(ensemble_params_from(cfg_), cfg_.ensemble_val_fraction,
                                     cfg_.seed);
                f.fit(data, end_row);
                // Refit directly to obtain the model object for persistence.
                std::vector<int> rows;
                for (int r : data.reduced.usable_rows())
                    if (r < end_row) rows.push_back(r);
                int n_val = int(std::lround(cfg_.ensemble_val_fraction * double(rows.size())));
                n_val = std::max(5, std::min(n_val, int(rows.size()) / 3));
                models::EnsembleParams p = ensemble_params_from(cfg_);
                p.gbt.seed = mix_seed(cfg_.seed, uint64_t(end_row));
                p.lstm.seed = mix_seed(cfg_.seed, uint64_t(end_row) + 7919);
                const models::EnsembleModel model = models::fit_ensemble(
                    data.reduced, {rows.begin(), rows.end() - n_val},
                    {rows.end() - n_val, rows.end()}, p);
                doc = model.to_json();
            } else if (name == "har_cj" || name == "harq_cj") {
                const models::HarModel model =
                    models::fit_har(matrix_, fit_rows, models::har_variant_from_string(name));
                doc = model.to_json();
            } else if (name == "garch") {
                std::vector<double> window(data.daily_returns.values.begin(),
                                           data.daily_returns.values.begin() + end_row);
                models::GarchFitOptions opts;
                opts.max_fevals = cfg_.garch_max_fevals;
                doc = models::fit_garch(window, opts).to_json();
            } else {
                throw ConfigError("unknown backtest model '" + name +
                                  "' (expected ensemble, har_cj, harq_cj or garch)");
            }
            write_text_artifact("fit", "models/" + name + ".json", doc);
        }
    }
    have_fit_ = true;
    note_timing("fit", ms_since(start), reused);
}

void Runner::ensure_backtest() {
    if (have_backtest_) return;
    ensure_features();
    const auto start = Clock::now();
    const std::vector<std::string> outputs = {"forecast_records.csv"};

    const bool reused = can_reuse("backtest", outputs);
    if (reused) {
        std::ifstream in(out_path("forecast_records.csv"));
        records_ = eval::read_records_csv(in);
        note_artifact("backtest", "forecast_records.csv");
    } else {
        const eval::BacktestDataset data{matrix_, reduced_, daily_close_returns(series_)};

        std::vector<std::shared_ptr<eval::Forecaster>> forecasters;
        for (const auto& name : cfg_.backtest_models) {
            if (name == "ensemble")
                forecasters.push_back(std::make_shared<EnsembleForecaster>(
                    ensemble_params_from(cfg_), cfg_.ensemble_val_fraction, cfg_.seed));
            else if (name == "har_cj")
                forecasters.push_back(
                    std::make_shared<HarForecaster>(models::HarVariant::HarCj));
            else if (name == "harq_cj")
                forecasters.push_back(
                    std::make_shared<HarForecaster>(models::HarVariant::HarqCj));
            else if (name == "garch")
                forecasters.push_back(std::make_shared<GarchForecaster>(
                    cfg_.garch_max_fevals, target_spec_from_string(cfg_.target)));
            else
                throw ConfigError("unknown backtest model '" + name + "'");
        }

        eval::BacktestScheme scheme;
        scheme.refit_every = cfg_.refit_every;
        scheme.test_start_row = -1;
        for (size_t i = 0; i < matrix_.n_rows(); ++i)
            if (matrix_.days[i] > cfg_.validation_end) {
                scheme.test_start_row = int(i);
                break;
            }
        if (scheme.test_start_row < 0)
            throw DataError("no rows after validation_end; nothing to backtest");

        records_ = eval::rolling_backtest(forecasters, data, scheme);
        std::ostringstream out;
        eval::write_records_csv(out, records_);
        write_text_artifact("backtest", "forecast_records.csv", out.str());
    }
    have_backtest_ = true;
    note_timing("backtest", ms_since(start), reused);
}

void Runner::ensure_evaluate() {
    if (have_evaluate_) return;
    ensure_backtest();
    const auto start = Clock::now();
    const std::vector<std::string> outputs = {"metrics.json", "metrics.txt", "dm_results.json",
                                              "heatmap.csv"};

    const auto by_model = eval::records_by_model(records_);
    metric_reports_.clear();
    for (const auto& [model, recs] : by_model) metric_reports_.push_back(eval::metrics(recs));

    eval::DmOptions dm_opts;
    dm_opts.significance = cfg_.dm_significance;
    dm_opts.newey_west_lags = cfg_.newey_west_lags;
    dm_opts.small_sample = cfg_.dm_small_sample;

    std::vector<eval::DmResult> dm_results;
    for (const auto& [ma, ra] : by_model) {
        for (const auto& [mb, rb] : by_model) {
            if (ma == mb) continue;
            std::vector<double> ea, eb;
            for (const auto& r : ra) ea.push_back(r.prediction - r.actual);
            for (const auto& r : rb) eb.push_back(r.prediction - r.actual);
            eval::DmResult res = eval::dm_test(ea, eb, dm_opts);
            res.model_a = ma;
            res.model_b = mb;
            dm_results.push_back(std::move(res));
        }
    }

    heatmap_ = eval::rejection_heatmap(by_model, cfg_.segment_size, cfg_.dm_significance);
    heatmap_available_ = true;

    const bool reused = can_reuse("evaluate", outputs);
    if (reused) {
        for (const auto& rel : outputs) note_artifact("evaluate", rel);
    } else {
        write_text_artifact("evaluate", "metrics.json", eval::metrics_json(metric_reports_));
        write_text_artifact("evaluate", "metrics.txt", eval::metrics_table(metric_reports_));
        write_text_artifact("evaluate", "dm_results.json", eval::dm_results_json(dm_results));
        std::ostringstream hm;
        eval::write_heatmap_csv(hm, heatmap_);
        write_text_artifact("evaluate", "heatmap.csv", hm.str());
    }
    have_evaluate_ = true;
    note_timing("evaluate", ms_since(start), reused);
}

void Runner::ensure_plot() {
    if (have_plot_) return;
    ensure_evaluate();
    const auto start = Clock::now();

    const auto by_model = eval::records_by_model(records_);
    std::vector<std::string> outputs = {"plots/heatmap.svg"};
    for (const auto& [model, _] : by_model) outputs.push_back("plots/forecast_" + model + ".svg");

    const bool reused = can_reuse("plot", outputs);
    if (reused) {
        for (const auto& rel : outputs) note_artifact("plot", rel);
    } else {
        for (const auto& [model, recs] : by_model)
            write_text_artifact("plot", "plots/forecast_" + model + ".svg",
                                forecast_chart_svg(model, recs));
        write_text_artifact("plot", "plots/heatmap.svg", heatmap_svg(heatmap_));
    }
    have_plot_ = true;
    note_timing("plot", ms_since(start), reused);
}

RunManifest Runner::manifest() const {
    RunManifest m;
    m.config_hash = hex64(cfg_.config_hash());
    m.seed = cfg_.seed;
    m.artifacts = artifacts_;
    m.timings = timings_;
    m.versions = {{"voltcast", "0.1.0"}, {"artifact_format", "1"}};
    return m;
}

RunManifest Runner::run() {
    ensure_ingest();
    ensure_measures();
    ensure_rate();
    ensure_features();
    ensure_fit();
    ensure_backtest();
    ensure_evaluate();
    ensure_plot();

    const RunManifest m = manifest();
    write_file(out_path("manifest.json"), m.to_json());
    return m;
}

void Runner::run_stage(const std::string& name) {
    if (name == "ingest") ensure_ingest();
    else if (name == "measures") ensure_measures();
    else if (name == "rate") ensure_rate();
    else if (name == "features") ensure_features();
    else if (name == "fit") ensure_fit();
    else if (name == "backtest") ensure_backtest();
    else if (name == "evaluate") ensure_evaluate();
    else if (name == "plot") ensure_plot();
    else throw ConfigError("unknown stage '" + name + "'");
}

// ---------------------------------------------------------------------------
// Ablation harness
// ---------------------------------------------------------------------------
namespace {

eval::MetricReport ensemble_metrics_of(const Runner& runner) {
    for (const auto& r : runner.metric_reports())
        if (r.model == "ensemble") return r;
    throw ConfigError("ablation needs 'ensemble' among backtest.models");
}

}  // namespace

std::string run_ablation(const PipelineConfig& base, const std::vector<std::string>& toggles,
                         bool offline) {
    for (const auto& t : toggles) {
        AblationToggles probe;  // validates the name
        probe.set(t, false);
    }

    const std::string out_root = base.out_dir;
    PipelineConfig base_cfg = base;
    base_cfg.out_dir = (fs::path(out_root) / "base").string();
    Runner base_runner(base_cfg, /*resume=*/true, offline);
    base_runner.run();
    base_runner.ensure_evaluate();
    const eval::MetricReport base_metrics = ensemble_metrics_of(base_runner);

    nlohmann::json report;
    report["base"] = {{"mae", base_metrics.mae},
                      {"mse", base_metrics.mse},
                      {"mape", base_metrics.mape}};

    std::ostringstream table;
    char line[200];
    std::snprintf(line, sizeof(line), "%-24s %10s %10s %10s %10s %10s %10s\n", "configuration",
                  "MAE", "MSE", "MAPE", "dMAE", "dMSE", "dMAPE");
    table << line;
    std::snprintf(line, sizeof(line), "%-24s %10.4f %10.4f %10.4f %10s %10s %10s\n", "full",
                  base_metrics.mae, base_metrics.mse, base_metrics.mape, "-", "-", "-");
    table << line;

    auto& rows = report["ablations"] = nlohmann::json::array();
    for (const auto& toggle : toggles) {
        PipelineConfig cfg = base;
        cfg.ablation.set(toggle, false);
        cfg.out_dir = (fs::path(out_root) / ("ablate_" + toggle)).string();
        Runner runner(cfg, /*resume=*/true, offline);
        runner.run();
        const eval::MetricReport m = ensemble_metrics_of(runner);
        rows.push_back({{"toggle", toggle},
                        {"mae", m.mae},
                        {"mse", m.mse},
                        {"mape", m.mape},
                        {"delta_mae", m.mae - base_metrics.mae},
                        {"delta_mse", m.mse - base_metrics.mse},
                        {"delta_mape", m.mape - base_metrics.mape}});
        std::snprintf(line, sizeof(line), "%-24s %10.4f %10.4f %10.4f %+10.4f %+10.4f %+10.4f\n",
                      ("w/o " + toggle).c_str(), m.mae, m.mse, m.mape,
                      m.mae - base_metrics.mae, m.mse - base_metrics.mse,
                      m.mape - base_metrics.mape);
        table << line;
    }

    write_file((fs::path(out_root) / "ablation_report.json").string(), report.dump(2) + "\n");
    write_file((fs::path(out_root) / "ablation_report.txt").string(), table.str());
    return table.str();
}

}  // namespace voltcast::pipeline
