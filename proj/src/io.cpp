#include "codesmux/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace codesmux {

namespace {

using nlohmann::json;

std::string fmt(double v, const char* format = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

void write_codebook(const CodeBook& book, const std::string& path) {
  std::ostringstream ss;
  ss << "length = " << book.code_length() << "\n";
  ss << "sensors = " << book.codes.size() << "\n";
  for (const auto& c : book.codes)
    ss << "code." << c.sensor_id << " = " << c.to_string() << "\n";
  const auto& g = book.geometry;
  ss << "geometry.electrode_width_um = " << fmt(g.electrode_width_um) << "\n";
  ss << "geometry.bit_pitch_um = " << fmt(g.bit_pitch_um) << "\n";
  ss << "geometry.pre_offset_um = " << fmt(g.pre_offset_um) << "\n";
  ss << "geometry.sensing_zone_um = " << fmt(g.sensing_zone_um) << "\n";
  write_text_atomic(path, ss.str());
}

CodeBook read_codebook(const std::string& path) {
  CodeBook book;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ": bad line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.rfind("code.", 0) == 0) {
      SensorCode c;
      c.sensor_id = std::stoi(key.substr(5));
      for (char ch : val) {
        if (ch != '0' && ch != '1')
          throw std::runtime_error(path + ": bad bitstring " + val);
        c.bits.push_back(uint8_t(ch == '1'));
      }
      book.codes.push_back(std::move(c));
    } else if (key == "geometry.electrode_width_um") {
      book.geometry.electrode_width_um = std::stod(val);
    } else if (key == "geometry.bit_pitch_um") {
      book.geometry.bit_pitch_um = std::stod(val);
    } else if (key == "geometry.pre_offset_um") {
      book.geometry.pre_offset_um = std::stod(val);
    } else if (key == "geometry.sensing_zone_um") {
      book.geometry.sensing_zone_um = std::stod(val);
    }
    // length/sensors are derivable; tolerated but not required
  }
  if (book.codes.empty()) throw std::runtime_error(path + ": no codes");
  return book;
}

void write_signal_csv(const SignalRecord& rec, const std::string& path) {
  std::ostringstream ss;
  ss << "# sample_rate_hz=" << fmt(rec.sample_rate_hz) << "\n";
  ss << "time_s,pre_v,code_v\n";
  for (std::size_t i = 0; i < rec.size(); ++i)
    ss << fmt(double(i) / rec.sample_rate_hz) << "," << fmt(rec.pre_channel[i])
       << "," << fmt(rec.code_channel[i]) << "\n";
  write_text_atomic(path, ss.str());
}

SignalRecord read_signal_csv(const std::string& path) {
  SignalRecord rec;
  std::istringstream in(slurp(path));
  std::string line;
  bool have_rate = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find("sample_rate_hz=");
      if (eq != std::string::npos) {
        rec.sample_rate_hz = std::stod(line.substr(eq + 15));
        have_rate = true;
      }
      continue;
    }
    if (line.rfind("time_s", 0) == 0) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 3) throw std::runtime_error(path + ": bad row: " + line);
    rec.pre_channel.push_back(std::stod(cols[1]));
    rec.code_channel.push_back(std::stod(cols[2]));
  }
  if (!have_rate) throw std::runtime_error(path + ": missing sample_rate_hz comment");
  return rec;
}

void write_events_csv(const std::vector<ParticleEvent>& events,
                      const std::string& path) {
  std::ostringstream ss;
  ss << "channel,t_arrival_s,speed_um_s,amplitude_v\n";
  for (const auto& e : events)
    ss << e.channel << "," << fmt(e.t_arrival_s) << "," << fmt(e.speed_um_s)
       << "," << fmt(e.amplitude_v) << "\n";
  write_text_atomic(path, ss.str());
}

std::vector<ParticleEvent> read_events_csv(const std::string& path) {
  std::vector<ParticleEvent> events;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line.rfind("channel", 0) == 0) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 4) throw std::runtime_error(path + ": bad row: " + line);
    ParticleEvent e;
    e.channel = std::stoi(cols[0]);
    e.t_arrival_s = std::stod(cols[1]);
    e.speed_um_s = std::stod(cols[2]);
    e.amplitude_v = std::stod(cols[3]);
    events.push_back(e);
  }
  return events;
}

void write_training_csv(const TrainingSet& set, const std::string& path) {
  std::ostringstream ss;
  ss << "x1_v,x2_s,x3_s,x4_s,speed_um_s\n";
  for (const auto& s : set.samples)
    ss << fmt(s.features.x1_v) << "," << fmt(s.features.x2_s) << ","
       << fmt(s.features.x3_s) << "," << fmt(s.features.x4_s) << ","
       << fmt(s.speed_um_s) << "\n";
  write_text_atomic(path, ss.str());
}

TrainingSet read_training_csv(const std::string& path) {
  TrainingSet set;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line.rfind("x1_v", 0) == 0) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 5) throw std::runtime_error(path + ": bad row: " + line);
    TrainingSample s;
    s.features.x1_v = std::stod(cols[0]);
    s.features.x2_s = std::stod(cols[1]);
    s.features.x3_s = std::stod(cols[2]);
    s.features.x4_s = std::stod(cols[3]);
    s.speed_um_s = std::stod(cols[4]);
    set.samples.push_back(s);
  }
  if (set.samples.empty()) throw std::runtime_error(path + ": empty training set");
  return set;
}

void write_features_csv(const std::vector<PulseFeatures>& feats,
                        const std::string& path) {
  std::ostringstream ss;
  ss << "t_peak_s,x1_v,x2_s,x3_s,x4_s\n";
  for (const auto& f : feats)
    ss << fmt(f.t_peak_s) << "," << fmt(f.x1_v) << "," << fmt(f.x2_s) << ","
       << fmt(f.x3_s) << "," << fmt(f.x4_s) << "\n";
  write_text_atomic(path, ss.str());
}

void write_scaling(const ScalingTable& table, const std::vector<double>& shape,
                   const std::string& path) {
  std::ostringstream ss;
  for (const auto& [id, row] : table.rows) {
    ss << "scale." << id << " = ";
    for (std::size_t k = 0; k < row.factors.size(); ++k)
      ss << (k ? "," : "") << fmt(row.factors[k]);
    ss << "\n";
  }
  if (!shape.empty()) {
    ss << "shape = ";
    for (std::size_t i = 0; i < shape.size(); ++i)
      ss << (i ? "," : "") << fmt(shape[i]);
    ss << "\n";
  }
  write_text_atomic(path, ss.str());
}

std::pair<ScalingTable, std::vector<double>> read_scaling(const std::string& path) {
  ScalingTable table;
  std::vector<double> shape;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ": bad line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.rfind("scale.", 0) == 0) {
      ScalingRow row;
      for (const auto& tok : split(val, ','))
        row.factors.push_back(std::stod(trim(tok)));
      table.rows[std::stoi(key.substr(6))] = std::move(row);
    } else if (key == "shape") {
      for (const auto& tok : split(val, ','))
        shape.push_back(std::stod(trim(tok)));
    }
  }
  if (table.rows.empty()) throw std::runtime_error(path + ": no scaling rows");
  return {std::move(table), std::move(shape)};
}

void write_k_report_json(const KSelectionReport& rep, const std::string& path) {
  json j;
  j["k_star"] = rep.k_star;
  j["in_sample_err"] = rep.in_sample_err;
  j["out_sample_err"] = rep.out_sample_err;
  j["repeats"] = rep.repeats;
  j["seed"] = rep.rng_seed;
  write_text_atomic(path, j.dump(2) + "\n");
}

void write_k_curves_csv(const KSelectionReport& rep, const std::string& path) {
  std::ostringstream ss;
  ss << "k,in_sample_err,out_sample_err\n";
  for (std::size_t i = 0; i < rep.in_sample_err.size(); ++i)
    ss << (i + 1) << "," << fmt(rep.in_sample_err[i]) << ","
       << fmt(rep.out_sample_err[i]) << "\n";
  write_text_atomic(path, ss.str());
}

void write_decode_report_json(const DecodeResult& res, const std::string& path) {
  json j;
  j["events"] = json::array();
  for (const auto& e : res.events)
    j["events"].push_back({{"pulse_index", e.pulse_index},
                           {"sensor_id", e.sensor_id},
                           {"t_peak_s", e.t_peak_s},
                           {"speed_um_s", e.est_speed_um_s},
                           {"amplitude_v", e.est_amplitude_v}});
  j["total_mse"] = res.total_mse;
  j["clusters"] = res.clusters;
  j["exhaustive"] = res.exhaustive;
  j["warnings"] = res.warnings;
  write_text_atomic(path, j.dump(2) + "\n");
}

void write_experiment_json(const ExperimentReport& rep, const std::string& path) {
  json j;
  j["cells"] = json::array();
  for (const auto& c : rep.cells)
    j["cells"].push_back({{"noise_sigma_v", c.noise_sigma_v},
                          {"n_events", c.n_events},
                          {"accuracy_mean", c.accuracy_mean},
                          {"accuracy_std", c.accuracy_std},
                          {"speed_mae_mean", c.speed_mae_mean}});
  write_text_atomic(path, j.dump(2) + "\n");
}

void write_experiment_csv(const ExperimentReport& rep, const std::string& path) {
  std::ostringstream ss;
  ss << "trial,noise_sigma_v,n_events,accuracy,speed_mae\n";
  for (const auto& r : rep.trial_rows)
    ss << r.trial << "," << fmt(r.noise_sigma_v) << "," << r.n_events << ","
       << fmt(r.accuracy) << "," << fmt(r.speed_mae_um_s) << "\n";
  write_text_atomic(path, ss.str());
}

}  // namespace codesmux
