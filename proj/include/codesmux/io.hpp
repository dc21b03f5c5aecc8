#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "codesmux/codebook.hpp"
#include "codesmux/decode.hpp"
#include "codesmux/eval.hpp"
#include "codesmux/scaling.hpp"
#include "codesmux/speedknn.hpp"
#include "codesmux/synth.hpp"

namespace codesmux {

// All writers go through a temp file + rename so readers never see a
// half-written file.
void write_text_atomic(const std::string& path, const std::string& content);

// Codebook: plain-text key-value (length, sensors, code.<id>, geometry.*).
void write_codebook(const CodeBook& book, const std::string& path);
CodeBook read_codebook(const std::string& path);

// Signal: "# sample_rate_hz=<v>" comment, then CSV time_s,pre_v,code_v.
void write_signal_csv(const SignalRecord& rec, const std::string& path);
SignalRecord read_signal_csv(const std::string& path);

// Ground-truth events: CSV channel,t_arrival_s,speed_um_s,amplitude_v.
void write_events_csv(const std::vector<ParticleEvent>& events,
                      const std::string& path);
std::vector<ParticleEvent> read_events_csv(const std::string& path);

// Training set: CSV x1_v,x2_s,x3_s,x4_s,speed_um_s.
void write_training_csv(const TrainingSet& set, const std::string& path);
TrainingSet read_training_csv(const std::string& path);

// Features: CSV t_peak_s,x1_v,x2_s,x3_s,x4_s.
void write_features_csv(const std::vector<PulseFeatures>& feats,
                        const std::string& path);

// Scaling: "scale.<sensor_id> = f1,...,fL" rows plus optional
// "shape = p1,...,pN" template shape.
void write_scaling(const ScalingTable& table, const std::vector<double>& shape,
                   const std::string& path);
std::pair<ScalingTable, std::vector<double>> read_scaling(const std::string& path);

// JSON reports.
void write_k_report_json(const KSelectionReport& rep, const std::string& path);
void write_k_curves_csv(const KSelectionReport& rep, const std::string& path);
void write_decode_report_json(const DecodeResult& res, const std::string& path);
void write_experiment_json(const ExperimentReport& rep, const std::string& path);
void write_experiment_csv(const ExperimentReport& rep, const std::string& path);

}  // namespace codesmux
