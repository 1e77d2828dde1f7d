#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "chartlab/common.hpp"

namespace chartlab {

/// L x 2 channel-chart coordinates plus how they were produced.
struct ChannelChart {
  Points2 z;
  std::string method;
  std::string metric_tag;
  std::uint64_t seed = 0;
  nlohmann::json hyperparameters = nlohmann::json::object();

  /// Objective value after every accepted optimizer step (first entry is the
  /// initial value). Empty for parametric charts.
  std::vector<double> objective_trace;
  std::vector<std::string> warnings;

  Index size() const { return z.rows(); }
};

}  // namespace chartlab
