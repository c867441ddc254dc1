#ifndef VLB_IO_HPP
#define VLB_IO_HPP

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "network.hpp"
#include "presets.hpp"
#include "training.hpp"

namespace vlb {

using json = nlohmann::json;

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += tbl[(v >> 18) & 63];
    out += tbl[(v >> 12) & 63];
    out += tbl[(v >> 6) & 63];
    out += tbl[v & 63];
  }
  if (i + 1 == bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    out += tbl[(v >> 18) & 63];
    out += tbl[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += tbl[(v >> 18) & 63];
    out += tbl[(v >> 12) & 63];
    out += tbl[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& s) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (s.size() % 4) throw ConfigError("base64 payload has invalid length");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < s.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      if (s[i + k] == '=') {
        v[k] = 0;
        ++pad;
      } else {
        v[k] = val(s[i + k]);
        if (v[k] < 0) throw ConfigError("base64 payload has invalid characters");
      }
    }
    std::uint32_t w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back((w >> 16) & 255);
    if (pad < 2) out.push_back((w >> 8) & 255);
    if (pad < 1) out.push_back(w & 255);
  }
  return out;
}

// Little-endian float64 payload.
inline std::string encode_doubles(const Vector& v) {
  std::vector<std::uint8_t> bytes(v.size() * 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &v[i], 8);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return base64_encode(bytes);
}

inline Vector decode_doubles(const std::string& s) {
  auto bytes = base64_decode(s);
  if (bytes.size() % 8) throw ConfigError("float64 payload length is not a multiple of 8");
  Vector v(bytes.size() / 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    std::memcpy(&v[i], &bits, 8);
  }
  return v;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Hash of the canonical (key-sorted, compact) JSON dump.
inline std::string config_hash(const json& j) { return hex64(fnv1a64(j.dump())); }

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& schema, const std::string& hash,
            const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot write " + path);
    out_ << "# " << schema << " config_hash=" << hash << "\n";
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

inline json to_json(const ScheduleSpec& s) {
  return {{"regime", s.regime}, {"family", s.family}, {"a", s.a}, {"eta0", s.eta0}, {"eta1", s.eta1}};
}

inline ScheduleSpec schedule_spec_from_json(const json& j) {
  ScheduleSpec s;
  s.regime = j.at("regime").get<std::string>();
  s.family = j.at("family").get<std::string>();
  s.a = j.value("a", 1.0);
  s.eta0 = j.at("eta0").get<double>();
  s.eta1 = j.at("eta1").get<double>();
  return s;
}

inline json to_json(const NetworkConfig& c) {
  return {{"input_dim", c.input_dim},
          {"hidden", c.hidden},
          {"embedding", to_string(c.embedding)},
          {"n_freqs", c.n_freqs},
          {"seed", c.seed},
          {"zero_init_output", c.zero_init_output},
          {"cdf_target", c.cdf_target == DesignedTarget::LikelihoodWeight ? "likelihood" : "alpha2"}};
}

inline NetworkConfig network_config_from_json(const json& j) {
  NetworkConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.embedding = parse_embedding(j.at("embedding").get<std::string>());
  c.n_freqs = j.at("n_freqs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.zero_init_output = j.at("zero_init_output").get<bool>();
  c.cdf_target = j.value("cdf_target", std::string("likelihood")) == "alpha2" ? DesignedTarget::AlphaSquared
                                                                              : DesignedTarget::LikelihoodWeight;
  return c;
}

inline json to_json(const WarmStartRecord& w) {
  return {{"noise", w.noise}, {"alpha0", w.alpha0}, {"sigma0", w.sigma0}, {"seed", w.seed}};
}

inline WarmStartRecord warm_start_from_json(const json& j) {
  return {j.at("noise").get<std::string>(), j.at("alpha0").get<double>(), j.at("sigma0").get<double>(),
          j.at("seed").get<std::uint64_t>()};
}

struct Checkpoint {
  NetworkConfig network;
  ScheduleSpec schedule;
  WarmStartRecord warm_start;
  TrainState state;
  json training;  // optimizer constants and run metadata
};

inline json to_json(const Checkpoint& c) {
  return {{"format", "vlb-checkpoint/1"},
          {"network", to_json(c.network)},
          {"schedule", to_json(c.schedule)},
          {"warm_start", to_json(c.warm_start)},
          {"training", c.training},
          {"step", c.state.step},
          {"params", encode_doubles(c.state.params)},
          {"adam_m", encode_doubles(c.state.adam.m)},
          {"adam_v", encode_doubles(c.state.adam.v)},
          {"adam_step", c.state.adam.step},
          {"ema", encode_doubles(c.state.ema.shadow)},
          {"ema_rate", c.state.ema.rate},
          {"ema_warmup", c.state.ema.warmup}};
}

inline Checkpoint checkpoint_from_json(const json& j) {
  if (j.value("format", std::string()) != "vlb-checkpoint/1") throw ConfigError("unrecognized checkpoint format");
  Checkpoint c;
  c.network = network_config_from_json(j.at("network"));
  c.schedule = schedule_spec_from_json(j.at("schedule"));
  c.warm_start = warm_start_from_json(j.at("warm_start"));
  c.training = j.value("training", json::object());
  c.state.step = j.at("step").get<std::uint64_t>();
  c.state.params = decode_doubles(j.at("params").get<std::string>());
  c.state.adam.m = decode_doubles(j.at("adam_m").get<std::string>());
  c.state.adam.v = decode_doubles(j.at("adam_v").get<std::string>());
  c.state.adam.step = j.at("adam_step").get<std::uint64_t>();
  c.state.ema.shadow = decode_doubles(j.at("ema").get<std::string>());
  c.state.ema.rate = j.at("ema_rate").get<double>();
  c.state.ema.warmup = j.at("ema_warmup").get<bool>();
  return c;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) { write_text(path, to_json(c).dump(1) + "\n"); }

inline Checkpoint load_checkpoint(const std::string& path) { return checkpoint_from_json(json::parse(read_text(path))); }

}  // namespace vlb

#endif
