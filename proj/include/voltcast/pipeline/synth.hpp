#pragma once

#include <cstdint>
#include <string>

#include "voltcast/calendar.hpp"

namespace voltcast::pipeline {

/// Synthetic fixture: half-hourly prices with a diurnal pattern, stochastic
/// log-variance driven by weather / supply-demand / regional factors and the
/// per-year severity rating, Poisson jump days, a matching exogenous table,
/// keyword-bearing weather reports and a ready-to-run config. Every feature
/// group carries planted predictive signal so ablations are measurable.
struct SynthOptions {
    int n_days = 400;
    int slots_per_day = 48;
    uint64_t seed = 20090701;
    Date start_day = Date::from_ymd(2009, 7, 1);
    int train_days = 280;       // split boundaries written into the config
    int validation_days = 60;   // test = remainder
};

struct SynthResult {
    std::string prices_csv;
    std::string exogenous_csv;
    std::string corpus_dir;
    std::string config_path;
};

SynthResult generate_fixture(const std::string& dir, const SynthOptions& opts);

}  // namespace voltcast::pipeline
