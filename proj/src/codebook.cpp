#include "codesmux/codebook.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace codesmux {

int SensorCode::popcount() const {
  return int(std::count(bits.begin(), bits.end(), uint8_t{1}));
}

std::string SensorCode::to_string() const {
  std::string s;
  s.reserve(bits.size());
  for (uint8_t b : bits) s.push_back(b ? '1' : '0');
  return s;
}

std::size_t CodeBook::code_length() const {
  return codes.empty() ? 0 : codes.front().bits.size();
}

const SensorCode& CodeBook::find(int sensor_id) const {
  for (const auto& c : codes)
    if (c.sensor_id == sensor_id) return c;
  throw std::invalid_argument("unknown sensor_id " + std::to_string(sensor_id));
}

ValidationReport validate_codebook(const CodeBook& book) {
  ValidationReport rep;
  auto flag = [&rep](std::string msg) { rep.violations.push_back(std::move(msg)); };

  if (book.codes.empty()) {
    flag("codebook has no codes");
    return rep;
  }
  const std::size_t len = book.codes.front().bits.size();
  for (const auto& c : book.codes) {
    if (c.bits.empty())
      flag("sensor " + std::to_string(c.sensor_id) + ": empty code");
    else if (c.bits.size() != len)
      flag("sensor " + std::to_string(c.sensor_id) + ": length mismatch");
    if (!c.bits.empty() && c.bits.front() != 1)
      flag("sensor " + std::to_string(c.sensor_id) + ": leading bit is 0");
  }

  // pairwise distinct bit sequences
  for (std::size_t i = 0; i < book.codes.size(); ++i)
    for (std::size_t j = i + 1; j < book.codes.size(); ++j)
      if (book.codes[i].bits == book.codes[j].bits)
        flag("duplicate code " + book.codes[i].to_string() + " for sensors " +
             std::to_string(book.codes[i].sensor_id) + " and " +
             std::to_string(book.codes[j].sensor_id));

  // ids distinct and contiguous 1..S
  std::set<int> ids;
  for (const auto& c : book.codes) {
    if (!ids.insert(c.sensor_id).second)
      flag("duplicate sensor_id " + std::to_string(c.sensor_id));
  }
  if (ids.size() == book.codes.size()) {
    if (*ids.begin() != 1 || *ids.rbegin() != int(book.codes.size()))
      flag("sensor_ids are not contiguous 1..S");
  }

  const auto& g = book.geometry;
  if (g.electrode_width_um <= 0) flag("geometry.electrode_width_um <= 0");
  if (g.bit_pitch_um <= 0) flag("geometry.bit_pitch_um <= 0");
  if (g.pre_offset_um <= 0) flag("geometry.pre_offset_um <= 0");
  if (g.sensing_zone_um <= 0) flag("geometry.sensing_zone_um <= 0");

  return rep;
}

namespace {

std::vector<uint8_t> bits_of(unsigned value, int length) {
  std::vector<uint8_t> bits(length);
  for (int i = 0; i < length; ++i)
    bits[i] = uint8_t((value >> (length - 1 - i)) & 1u);
  return bits;
}

int hamming(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
  return d;
}

}  // namespace

CodeBook generate_codebook(int sensors, int bits, const SensorGeometry& geometry) {
  if (sensors < 1 || bits < 1)
    throw std::invalid_argument("sensors and bits must be positive");
  const long capacity = 1L << (bits - 1);
  if (sensors > capacity)
    throw std::invalid_argument(
        "capacity exceeded: " + std::to_string(sensors) + " sensors > " +
        std::to_string(capacity) + " available " + std::to_string(bits) +
        "-bit codes with leading 1");

  // Candidates: every length-L code with leading bit 1, ascending binary order.
  std::vector<std::vector<uint8_t>> candidates;
  candidates.reserve(std::size_t(capacity));
  const unsigned lo = 1u << (bits - 1);
  const unsigned hi = (bits < 32) ? (1u << bits) : 0;  // bits <= 31 in practice
  for (unsigned v = lo; v != hi; ++v) candidates.push_back(bits_of(v, bits));

  std::vector<std::vector<uint8_t>> chosen;
  chosen.push_back(candidates.back());  // all-ones first
  std::vector<bool> used(candidates.size(), false);
  used.back() = true;

  while (int(chosen.size()) < sensors) {
    int best = -1;
    int best_dist = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (used[i]) continue;
      int d = bits + 1;
      for (const auto& c : chosen) d = std::min(d, hamming(candidates[i], c));
      if (d > best_dist) {
        best_dist = d;
        best = int(i);
      }
    }
    used[std::size_t(best)] = true;
    chosen.push_back(candidates[std::size_t(best)]);
  }

  CodeBook book;
  book.geometry = geometry;
  for (int i = 0; i < sensors; ++i)
    book.codes.push_back({i + 1, chosen[std::size_t(i)]});
  return book;
}

std::vector<int> cross_correlation(const SensorCode& a, const SensorCode& b) {
  if (a.bits.size() != b.bits.size())
    throw std::invalid_argument("cross_correlation: code length mismatch");
  const int L = int(a.bits.size());
  std::vector<int> out(std::size_t(2 * L - 1), 0);
  for (int lag = -(L - 1); lag <= L - 1; ++lag) {
    int acc = 0;
    for (int i = 0; i < L; ++i) {
      const int j = i - lag;
      if (j >= 0 && j < L) acc += int(a.bits[std::size_t(i)]) * int(b.bits[std::size_t(j)]);
    }
    out[std::size_t(lag + L - 1)] = acc;
  }
  return out;
}

int hamming_distance(const SensorCode& a, const SensorCode& b) {
  if (a.bits.size() != b.bits.size())
    throw std::invalid_argument("hamming_distance: code length mismatch");
  return hamming(a.bits, b.bits);
}

int min_hamming_distance(const CodeBook& book) {
  if (book.codes.size() < 2)
    throw std::invalid_argument("min_hamming_distance needs at least 2 codes");
  int best = int(book.code_length()) + 1;
  for (std::size_t i = 0; i < book.codes.size(); ++i)
    for (std::size_t j = i + 1; j < book.codes.size(); ++j)
      best = std::min(best, hamming_distance(book.codes[i], book.codes[j]));
  return best;
}

}  // namespace codesmux
