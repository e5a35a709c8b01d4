#include "voltcast/pipeline/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "voltcast/csv.hpp"
#include "voltcast/errors.hpp"
#include "voltcast/stats.hpp"

namespace voltcast::pipeline {

namespace {

namespace fs = std::filesystem;

struct Ar1 {
    double phi, sigma, state = 0.0;
    double step(Rng& rng) {
        state = phi * state + sigma * rng.normal();
        return state;
    }
};

// Per-year severity ratings cycle through a high-contrast pattern so
// consecutive years differ sharply and the rating column stays identifiable
// across every split boundary.
int year_rating(int year) {
    static const int pattern[] = {2, 5, 3, 1, 4};
    const int idx = ((year - 2009) % 5 + 5) % 5;
    return pattern[idx];
}

// Keyword sets that make the mock provider reproduce each rating exactly
// (rule_base 3: +1 per severe keyword, -1 per calm keyword).
std::string report_text(int year, int rating) {
    std::string body;
    body += "Annual weather report " + std::to_string(year) + ".\n";
    body += "This report summarises observed conditions across the region: temperature, "
            "wind, rainfall and pressure systems over the year, with notes for the energy "
            "sector on demand-relevant episodes.\n";
    switch (rating) {
        case 1:
            body += "Conditions were mild throughout, with calm coastal weather for most of "
                    "the year.\n";
            break;
        case 2:
            body += "A mild year overall; seasonal temperatures tracked their usual ranges "
                    "with no damaging episodes recorded.\n";
            break;
        case 3:
            body += "An unremarkable year with typical seasonal variation and scattered "
                    "rainfall across the catchments.\n";
            break;
        case 4:
            body += "A summer heatwave placed sustained stress on the network during January "
                    "and February.\n";
            break;
        case 5:
            body += "A prolonged heatwave culminated in extreme temperatures, with several "
                    "records broken and elevated fire danger.\n";
            break;
    }
    body += "Rainfall totals and monthly summaries appear in the appendix tables.\n";
    return body;
}

}  // namespace

SynthResult generate_fixture(const std::string& dir, const SynthOptions& opts) {
    if (opts.n_days < 60) throw ConfigError("synthetic fixture needs at least 60 days");
    if (opts.train_days + opts.validation_days >= opts.n_days)
        throw ConfigError("synthetic fixture split exceeds n_days");

    fs::create_directories(dir);
    const fs::path base(dir);
    Rng rng(opts.seed);

    const int n = opts.n_days;
    const int m = opts.slots_per_day;

    // Latent factors; every exogenous group is a noisy linear view of one.
    Ar1 weather{0.6, 0.8};
    Ar1 supply_demand{0.5, 0.9};
    Ar1 regional{0.6, 0.8};

    std::vector<double> w(n), sd(n), rg(n);
    for (int t = 0; t < n; ++t) {
        w[t] = weather.step(rng);
        sd[t] = supply_demand.step(rng);
        rg[t] = regional.step(rng);
    }

    // Yearly ratings.
    std::map<int, int> ratings;
    for (int t = 0; t < n; ++t) {
        const int year = Date{opts.start_day.days + t}.year();
        if (!ratings.count(year)) ratings[year] = year_rating(year);
    }

    // ln sigma^2 recursion with planted dependence on every factor. The rating
    // modulates the weather *slope* (an interaction volatility history cannot
    // substitute for), and the AR innovation is observable only through
    // realized-measure history.
    const double base_ln_var = std::log(4.0);
    std::vector<double> ln_var(n);
    double x = base_ln_var;
    for (int t = 0; t < n; ++t) {
        ln_var[t] = x;
        const int rating = ratings.at(Date{opts.start_day.days + t}.year());
        const double weather_slope = 0.40 + 0.15 * (rating - 3);
        double next = base_ln_var + 0.50 * (x - base_ln_var) + weather_slope * w[t] +
                      0.60 * sd[t] + 0.45 * rg[t] + 0.12 * (rating - 3) + 0.28 * rng.normal();
        next = std::min(std::max(next, base_ln_var - 2.2), base_ln_var + 2.2);
        x = next;
    }

    // Intraday prices: mean-reverting level plus a diurnal shape and jump days.
    std::ofstream prices(base / "prices.csv");
    write_csv_row(prices, {"timestamp", "region", "price"});
    const int slot_minutes = 1440 / m;
    double level = 40.0;
    for (int t = 0; t < n; ++t) {
        const Date day{opts.start_day.days + t};
        const double step_sd = std::sqrt(std::exp(ln_var[t]) / m);

        const int n_jumps = rng.poisson(0.10);
        std::vector<int> jump_slots(n_jumps);
        for (auto& s : jump_slots) s = int(rng.below(uint64_t(m)));

        for (int j = 0; j < m; ++j) {
            level += step_sd * rng.normal() - 0.02 * (level - 40.0) / m;
            for (int s : jump_slots)
                if (s == j) level += (rng.uniform() < 0.5 ? -1.0 : 1.0) *
                                     step_sd * std::sqrt(double(m)) * rng.uniform(0.8, 1.6);
            const double shape = 1.6 * std::sin(2.0 * M_PI * j / m - 0.9) +
                                 0.7 * std::sin(4.0 * M_PI * j / m);
            double price = level + shape;
            if (rng.uniform() < 0.0004) price = -rng.uniform(0.0, 2.0);  // exercises cleaning
            write_csv_row(prices, {format_timestamp({day, j * slot_minutes}), "NSW",
                                   format_double(price)});
        }
    }
    prices.close();

    // Exogenous views of the latent factors.
    std::ofstream exog(base / "exogenous.csv");
    write_csv_row(exog, {"date", "air_temp_c", "wind_speed_ms", "rel_humidity_pct", "mslp_hpa",
                         "supply_mw", "demand_mw", "retail_price", "price_vic", "price_qld",
                         "price_sa", "price_tas"});
    for (int t = 0; t < n; ++t) {
        const Date day{opts.start_day.days + t};
        auto cell = [&](double v) { return format_double(v); };
        write_csv_row(exog, {format_date(day),
                             cell(18.0 + 5.0 * w[t] + 1.0 * rng.normal()),
                             cell(6.0 + 1.5 * w[t] + 0.5 * rng.normal()),
                             cell(60.0 - 8.0 * w[t] + 2.0 * rng.normal()),
                             cell(1013.0 - 5.0 * w[t] + 1.5 * rng.normal()),
                             cell(8700.0 - 300.0 * sd[t] + 120.0 * rng.normal()),
                             cell(7800.0 + 600.0 * sd[t] + 150.0 * rng.normal()),
                             cell(55.0 + 6.0 * sd[t] + 1.5 * rng.normal()),
                             cell(42.0 + 7.0 * rg[t] + 1.6 * rng.normal()),
                             cell(39.0 + 6.0 * rg[t] + 1.6 * rng.normal()),
                             cell(45.0 + 8.0 * rg[t] + 1.8 * rng.normal()),
                             cell(37.0 + 5.0 * rg[t] + 1.4 * rng.normal())});
    }
    exog.close();

    // Weather reports, one per year.
    const fs::path corpus = base / "weather_reports";
    fs::create_directories(corpus);
    for (const auto& [year, rating] : ratings) {
        std::ofstream report(corpus / (std::to_string(year) + ".txt"));
        report << report_text(year, rating);
    }

    // Ready-to-run config with fixture-scale hyperparameters.
    nlohmann::json cfg;
    cfg["seed"] = opts.seed;
    cfg["out_dir"] = "out";
    cfg["data"] = {{"prices_csv", "prices.csv"},
                   {"exogenous_csv", "exogenous.csv"},
                   {"weather_corpus_dir", "weather_reports"},
                   {"slots_per_day", m}};
    cfg["split"] = {
        {"train_end", format_date(Date{opts.start_day.days + opts.train_days - 1})},
        {"validation_end",
         format_date(Date{opts.start_day.days + opts.train_days + opts.validation_days - 1})}};
    cfg["jump_test"] = {{"alpha", 0.01}};
    cfg["features"] = {{"target", "ln_rv"},
                       {"sfs", {{"enabled", true}, {"budget", 30}, {"ridge_lambda", 1e-3}}},
                       {"kpca",
                        {{"enabled", true},
                         {"kernel", "rbf"},
                         {"gamma", 0.0},
                         {"variance_explained", 0.95},
                         {"n_components", 12}}}};
    cfg["models"] = {
        {"gbt",
         {{"n_rounds", 150}, {"max_depth", 3}, {"min_samples_leaf", 8}, {"learning_rate", 0.08},
          {"subsample", 1.0}}},
        {"lstm",
         {{"hidden", 16}, {"seq_len", 10}, {"batch", 32}, {"epochs", 80}, {"patience", 12},
          {"step_size", 0.004}, {"clip_norm", 5.0}}},
        {"garch", {{"max_fevals", 20000}}},
        {"ensemble", {{"val_fraction", 0.15}}}};
    cfg["backtest"] = {{"refit_every", 20},
                       {"models", {"ensemble", "har_cj", "harq_cj", "garch"}}};
    cfg["evaluation"] = {{"dm_significance", 0.10}, {"segment_size", 50}};
    cfg["provider"] = {{"kind", "offline-mock"},
                       {"rule_base", 3},
                       {"rule_table",
                        {{"heatwave", 1},
                         {"extreme", 1},
                         {"severe", 1},
                         {"flood", 1},
                         {"mild", -1},
                         {"calm", -1},
                         {"stable", -1}}}};
    cfg["rating"] = {{"top_k", 4}, {"period_mode", "annual"}, {"chunk_size", 1000},
                     {"chunk_overlap", 200}};

    std::ofstream config_file(base / "config.json");
    config_file << cfg.dump(2) << "\n";

    return SynthResult{(base / "prices.csv").string(), (base / "exogenous.csv").string(),
                       corpus.string(), (base / "config.json").string()};
}

}  // namespace voltcast::pipeline
