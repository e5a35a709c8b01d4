#include "voltcast/pipeline/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "voltcast/errors.hpp"
#include "voltcast/feature_matrix.hpp"
#include "voltcast/stats.hpp"

namespace voltcast::pipeline {

namespace {

using nlohmann::json;

std::string resolve_path(const std::string& path, const std::string& base_dir) {
    if (path.empty() || base_dir.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

const std::vector<std::string>& AblationToggles::valid_names() {
    static const std::vector<std::string> names = {
        "weather", "supply_demand", "price_fluctuations", "regional",
        "rating",  "llm_features",  "lstm",               "gbt"};
    return names;
}

void AblationToggles::set(const std::string& name, bool value) {
    if (name == "weather") weather = value;
    else if (name == "supply_demand") supply_demand = value;
    else if (name == "price_fluctuations") price_fluctuations = value;
    else if (name == "regional") regional = value;
    else if (name == "rating") rating = value;
    else if (name == "llm_features") llm_features = value;
    else if (name == "lstm") lstm = value;
    else if (name == "gbt") gbt = value;
    else {
        std::ostringstream msg;
        msg << "unknown toggle '" << name << "'; valid toggles:";
        for (const auto& n : valid_names()) msg << ' ' << n;
        throw ConfigError(msg.str());
    }
}

bool AblationToggles::get(const std::string& name) const {
    if (name == "weather") return weather;
    if (name == "supply_demand") return supply_demand;
    if (name == "price_fluctuations") return price_fluctuations;
    if (name == "regional") return regional;
    if (name == "rating") return rating;
    if (name == "llm_features") return llm_features;
    if (name == "lstm") return lstm;
    if (name == "gbt") return gbt;
    throw ConfigError("unknown toggle '" + name + "'");
}

std::set<std::string> AblationToggles::disabled_feature_groups() const {
    std::set<std::string> groups;
    if (!weather) groups.insert(kGroupWeather);
    if (!supply_demand) groups.insert(kGroupSupplyDemand);
    if (!price_fluctuations) groups.insert(kGroupPriceFluct);
    if (!regional) groups.insert(kGroupRegional);
    if (!rating || !llm_features) groups.insert(kGroupRating);
    return groups;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return from_json_text(text.str(), std::filesystem::path(path).parent_path().string());
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text,
                                              const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    PipelineConfig c;
    try {
        if (!j.contains("seed")) throw ConfigError("config must specify a seed");
        c.seed = j.at("seed").get<uint64_t>();
        c.seed_present = true;
        c.out_dir = resolve_path(j.value("out_dir", std::string("out")), base_dir);

        const json data = j.value("data", json::object());
        c.prices_csv = resolve_path(data.value("prices_csv", std::string()), base_dir);
        c.exogenous_csv = resolve_path(data.value("exogenous_csv", std::string()), base_dir);
        c.weather_corpus_dir =
            resolve_path(data.value("weather_corpus_dir", std::string()), base_dir);
        c.slots_per_day = data.value("slots_per_day", 48);
        c.allow_partial_final_day = data.value("allow_partial_final_day", false);
        c.pad_incomplete_days = data.value("pad_incomplete_days", false);

        const json split = j.value("split", json::object());
        if (!split.contains("train_end") || !split.contains("validation_end"))
            throw ConfigError("config must specify split.train_end and split.validation_end");
        c.train_end = parse_date(split.at("train_end").get<std::string>());
        c.validation_end = parse_date(split.at("validation_end").get<std::string>());

        c.jump_alpha = j.value("jump_test", json::object()).value("alpha", 0.01);

        const json features = j.value("features", json::object());
        c.target = features.value("target", std::string("rv"));
        const json sfs = features.value("sfs", json::object());
        c.sfs_enabled = sfs.value("enabled", true);
        c.sfs_budget = sfs.value("budget", 30);
        c.sfs_ridge_lambda = sfs.value("ridge_lambda", 1e-3);
        const json kpca = features.value("kpca", json::object());
        c.kpca_enabled = kpca.value("enabled", true);
        c.kpca_kernel = kpca.value("kernel", std::string("rbf"));
        c.kpca_gamma = kpca.value("gamma", 0.0);
        c.kpca_variance_explained = kpca.value("variance_explained", 0.95);
        c.kpca_components = kpca.value("n_components", 0);
        c.kpca_augment = kpca.value("augment", false);

        const json models = j.value("models", json::object());
        const json gbt = models.value("gbt", json::object());
        c.gbt.n_rounds = gbt.value("n_rounds", 200);
        c.gbt.max_depth = gbt.value("max_depth", 3);
        c.gbt.min_samples_leaf = gbt.value("min_samples_leaf", 5);
        c.gbt.learning_rate = gbt.value("learning_rate", 0.1);
        c.gbt.subsample = gbt.value("subsample", 1.0);
        const json lstm = models.value("lstm", json::object());
        c.lstm.hidden = lstm.value("hidden", 32);
        c.lstm.seq_len = lstm.value("seq_len", 22);
        c.lstm.batch = lstm.value("batch", 32);
        c.lstm.epochs = lstm.value("epochs", 300);
        c.lstm.patience = lstm.value("patience", 20);
        c.lstm.step_size = lstm.value("step_size", 1e-3);
        c.lstm.clip_norm = lstm.value("clip_norm", 5.0);
        c.garch_max_fevals = models.value("garch", json::object()).value("max_fevals", 20000);
        c.ensemble_val_fraction =
            models.value("ensemble", json::object()).value("val_fraction", 0.15);

        const json backtest = j.value("backtest", json::object());
        c.refit_every = backtest.value("refit_every", 20);
        if (backtest.contains("models"))
            c.backtest_models = backtest.at("models").get<std::vector<std::string>>();

        const json evaluation = j.value("evaluation", json::object());
        c.dm_significance = evaluation.value("dm_significance", 0.10);
        c.segment_size = evaluation.value("segment_size", 50);
        c.newey_west_lags = evaluation.value("newey_west_lags", 0);
        c.dm_small_sample = evaluation.value("small_sample", false);

        const json ablation = j.value("ablation", json::object());
        for (const auto& name : AblationToggles::valid_names())
            if (ablation.contains(name)) c.ablation.set(name, ablation.at(name).get<bool>());

        const json provider = j.value("provider", json::object());
        const std::string kind = provider.value("kind", std::string("offline-mock"));
        if (kind == "offline-mock")
            c.provider.kind = rag::ProviderConfig::Kind::OfflineMock;
        else if (kind == "remote")
            c.provider.kind = rag::ProviderConfig::Kind::Remote;
        else
            throw ConfigError("provider.kind must be offline-mock or remote");
        c.provider.endpoint = provider.value("endpoint", std::string());
        c.provider.auth_env = provider.value("auth_env", std::string("VOLTCAST_PROVIDER_TOKEN"));
        c.provider.model = provider.value("model", std::string());
        c.provider.timeout_s = provider.value("timeout_s", 30.0);
        c.provider.max_retries = provider.value("max_retries", 2);
        c.provider.parallelism = provider.value("parallelism", 1);
        c.provider.rule_base = provider.value("rule_base", 3);
        if (provider.contains("rule_table"))
            c.provider.rule_table =
                provider.at("rule_table").get<std::map<std::string, int>>();

        const json rating = j.value("rating", json::object());
        c.rating_top_k = rating.value("top_k", 4);
        c.prompt_template_path =
            resolve_path(rating.value("prompt_template_path", std::string()), base_dir);
        c.rating_period_mode = rating.value("period_mode", std::string("annual"));
        c.chunk_size = rating.value("chunk_size", size_t(1000));
        c.chunk_overlap = rating.value("chunk_overlap", size_t(200));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }

    c.validate();
    return c;
}

void PipelineConfig::validate() const {
    if (!seed_present) throw ConfigError("config must specify a seed");
    if (!(train_end < validation_end))
        throw ConfigError("split dates must be strictly ordered: train_end < validation_end "
                          "(the test span starts after validation_end)");
    if (!(jump_alpha > 0.0 && jump_alpha < 1.0))
        throw ConfigError("jump_test.alpha must lie in (0,1)");
    if (sfs_budget < 1) throw ConfigError("features.sfs.budget must be >= 1");
    if (chunk_overlap >= chunk_size)
        throw ConfigError("rating.chunk_overlap must be smaller than rating.chunk_size");
    if (rating_period_mode != "annual" && rating_period_mode != "monthly")
        throw ConfigError("rating.period_mode must be annual or monthly");
    if (backtest_models.empty()) throw ConfigError("backtest.models must not be empty");
    target_spec_from_string(target);  // throws on unknown targets
    provider.validate();
}

std::string PipelineConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["data"] = {{"prices_csv", prices_csv},
                 {"exogenous_csv", exogenous_csv},
                 {"weather_corpus_dir", weather_corpus_dir},
                 {"slots_per_day", slots_per_day},
                 {"allow_partial_final_day", allow_partial_final_day},
                 {"pad_incomplete_days", pad_incomplete_days}};
    j["split"] = {{"train_end", format_date(train_end)},
                  {"validation_end", format_date(validation_end)}};
    j["jump_test"] = {{"alpha", jump_alpha}};
    j["features"] = {{"target", target},
                     {"sfs",
                      {{"enabled", sfs_enabled},
                       {"budget", sfs_budget},
                       {"ridge_lambda", sfs_ridge_lambda}}},
                     {"kpca",
                      {{"enabled", kpca_enabled},
                       {"kernel", kpca_kernel},
                       {"gamma", kpca_gamma},
                       {"variance_explained", kpca_variance_explained},
                       {"n_components", kpca_components},
                       {"augment", kpca_augment}}}};
    j["models"] = {{"gbt",
                    {{"n_rounds", gbt.n_rounds},
                     {"max_depth", gbt.max_depth},
                     {"min_samples_leaf", gbt.min_samples_leaf},
                     {"learning_rate", gbt.learning_rate},
                     {"subsample", gbt.subsample}}},
                   {"lstm",
                    {{"hidden", lstm.hidden},
                     {"seq_len", lstm.seq_len},
                     {"batch", lstm.batch},
                     {"epochs", lstm.epochs},
                     {"patience", lstm.patience},
                     {"step_size", lstm.step_size},
                     {"clip_norm", lstm.clip_norm}}},
                   {"garch", {{"max_fevals", garch_max_fevals}}},
                   {"ensemble", {{"val_fraction", ensemble_val_fraction}}}};
    j["backtest"] = {{"refit_every", refit_every}, {"models", backtest_models}};
    j["evaluation"] = {{"dm_significance", dm_significance},
                       {"segment_size", segment_size},
                       {"newey_west_lags", newey_west_lags},
                       {"small_sample", dm_small_sample}};
    json ab;
    for (const auto& name : AblationToggles::valid_names()) ab[name] = ablation.get(name);
    j["ablation"] = ab;
    j["provider"] = {{"kind", provider.kind == rag::ProviderConfig::Kind::OfflineMock
                                  ? "offline-mock"
                                  : "remote"},
                     {"endpoint", provider.endpoint},
                     {"auth_env", provider.auth_env},
                     {"model", provider.model},
                     {"timeout_s", provider.timeout_s},
                     {"max_retries", provider.max_retries},
                     {"parallelism", provider.parallelism},
                     {"rule_base", provider.rule_base},
                     {"rule_table", provider.rule_table}};
    j["rating"] = {{"top_k", rating_top_k},
                   {"prompt_template_path", prompt_template_path},
                   {"period_mode", rating_period_mode},
                   {"chunk_size", chunk_size},
                   {"chunk_overlap", chunk_overlap}};
    return j.dump(2) + "\n";
}

uint64_t PipelineConfig::config_hash() const { return fnv1a64(to_json()); }

}  // namespace voltcast::pipeline
