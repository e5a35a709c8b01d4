#pragma once

#include <string>
#include <vector>

#include "voltcast/calendar.hpp"
#include "voltcast/evaluation.hpp"

namespace voltcast::pipeline {

/// Predicted-vs-actual line chart for one model's out-of-sample records.
std::string forecast_chart_svg(const std::string& model,
                               const std::vector<eval::ForecastRecord>& records);

/// DM rejection-count grid with "count/segments" cell labels.
std::string heatmap_svg(const eval::RejectionHeatmap& heatmap);

}  // namespace voltcast::pipeline
