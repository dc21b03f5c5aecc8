#pragma once

#include <map>
#include <vector>

#include "codesmux/codebook.hpp"

namespace codesmux {

// Per-sensor, per-bit ratio of code-pulse peak to pre-coding-pulse peak.
// Zero-bit positions carry factor 0.
struct ScalingRow {
  std::vector<double> factors;  // one per code bit position
  int n_events_used = 0;
};

struct ScalingTable {
  std::map<int, ScalingRow> rows;  // keyed by sensor_id

  const ScalingRow& row(int sensor_id) const;  // throws on missing row
  bool has(int sensor_id) const { return rows.count(sensor_id) != 0; }

  // Same factor at every positive bit of every sensor.
  static ScalingTable uniform(const CodeBook& book, double factor);
};

}  // namespace codesmux
