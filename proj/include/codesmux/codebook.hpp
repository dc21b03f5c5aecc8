#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace codesmux {

// One sensor's digital code, MSB-first as written ("10011").
struct SensorCode {
  int sensor_id = 0;
  std::vector<uint8_t> bits;  // values 0/1, bits[0] is the leading bit

  int popcount() const;
  std::string to_string() const;
};

// Shared electrode geometry, all lengths in micrometers.
struct SensorGeometry {
  double electrode_width_um = 10.0;
  double bit_pitch_um = 30.0;
  double pre_offset_um = 30.0;   // pre-coding zone to bit-1 zone, defaults to bit_pitch
  double sensing_zone_um = 20.0; // effective axial extent of one sensing gap
};

struct CodeBook {
  std::vector<SensorCode> codes;
  SensorGeometry geometry;

  std::size_t code_length() const;
  const SensorCode& find(int sensor_id) const;  // throws on unknown id
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_codebook(const CodeBook& book);

// Deterministic greedy max-min Hamming selection over all length-L codes with
// leading bit 1. First pick is the all-ones code; ties go to the candidate
// earliest in ascending binary order. Throws when sensors > 2^(bits-1).
CodeBook generate_codebook(int sensors, int bits,
                           const SensorGeometry& geometry = {});

// Aperiodic cross-correlation at lags -(L-1)..(L-1); result[lag + L - 1].
std::vector<int> cross_correlation(const SensorCode& a, const SensorCode& b);

int hamming_distance(const SensorCode& a, const SensorCode& b);

// Minimum pairwise Hamming distance; requires at least two codes.
int min_hamming_distance(const CodeBook& book);

}  // namespace codesmux
