#include "codesmux/scaling.hpp"

#include <stdexcept>

namespace codesmux {

const ScalingRow& ScalingTable::row(int sensor_id) const {
  auto it = rows.find(sensor_id);
  if (it == rows.end())
    throw std::invalid_argument("no scaling row for sensor " +
                                std::to_string(sensor_id));
  return it->second;
}

ScalingTable ScalingTable::uniform(const CodeBook& book, double factor) {
  ScalingTable t;
  for (const auto& c : book.codes) {
    ScalingRow row;
    row.factors.resize(c.bits.size(), 0.0);
    for (std::size_t k = 0; k < c.bits.size(); ++k)
      if (c.bits[k]) row.factors[k] = factor;
    t.rows[c.sensor_id] = std::move(row);
  }
  return t;
}

}  // namespace codesmux
