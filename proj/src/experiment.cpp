#include "poison/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#ifndef POISON_BUILD_VERSION
#define POISON_BUILD_VERSION "unknown"
#endif

namespace poison {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T, typename Parse>
T parse_value(const std::string& key, const std::string& raw, Parse parse) {
  try {
    std::size_t used = 0;
    T value = parse(raw, &used);
    if (used != raw.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": cannot parse value '" + raw + "'");
  }
}

std::vector<std::string> split_commas(const std::string& raw) {
  std::vector<std::string> parts;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

}  // namespace

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  double acc = 0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double stddev_of(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("stddev of empty sample");
  if (xs.size() < 2) return 0;
  const double m = mean_of(xs);
  double acc = 0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double median_of(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

Config parse_config_text(const std::string& text, const std::string& where) {
  Config cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string loc = where + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(loc + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument(loc + ": empty key");
    if (!cfg.emplace(key, value).second) {
      throw std::invalid_argument(loc + ": duplicate key " + key);
    }
  }
  return cfg;
}

Config parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

std::string serialize_config(const Config& cfg) {
  std::string out;
  for (const auto& [key, value] : cfg) {
    out += key;
    out += "=";
    out += value;
    out += "\n";
  }
  return out;
}

void validate_keys(const Config& cfg, const std::set<std::string>& known) {
  for (const auto& [key, value] : cfg) {
    (void)value;
    if (!known.count(key)) throw std::invalid_argument("unknown config key: " + key);
  }
}

std::string get_string(const Config& cfg, const std::string& key, const std::string& fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

bool get_bool(const Config& cfg, const std::string& key, bool fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw std::invalid_argument("config key " + key + ": expected true/false, got '" + it->second +
                              "'");
}

std::int64_t get_int(const Config& cfg, const std::string& key, std::int64_t fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  return parse_value<std::int64_t>(
      key, it->second, [](const std::string& s, std::size_t* used) { return std::stoll(s, used); });
}

std::uint64_t get_u64(const Config& cfg, const std::string& key, std::uint64_t fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  const std::string& raw = it->second;
  if (!raw.empty() && raw[0] == '-') {
    throw std::invalid_argument("config key " + key + ": expected unsigned value, got '" + raw +
                                "'");
  }
  return parse_value<std::uint64_t>(
      key, raw, [](const std::string& s, std::size_t* used) { return std::stoull(s, used); });
}

double get_double(const Config& cfg, const std::string& key, double fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  return parse_value<double>(
      key, it->second, [](const std::string& s, std::size_t* used) { return std::stod(s, used); });
}

std::vector<std::uint64_t> get_u64_list(const Config& cfg, const std::string& key,
                                        const std::vector<std::uint64_t>& fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  std::vector<std::uint64_t> out;
  for (const std::string& part : split_commas(it->second)) {
    out.push_back(parse_value<std::uint64_t>(
        key, part, [](const std::string& s, std::size_t* used) { return std::stoull(s, used); }));
  }
  if (out.empty()) throw std::invalid_argument("config key " + key + ": empty list");
  return out;
}

std::vector<int> get_int_list(const Config& cfg, const std::string& key,
                              const std::vector<int>& fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  std::vector<int> out;
  for (const std::string& part : split_commas(it->second)) {
    out.push_back(static_cast<int>(parse_value<std::int64_t>(
        key, part, [](const std::string& s, std::size_t* used) { return std::stoll(s, used); })));
  }
  if (out.empty()) throw std::invalid_argument("config key " + key + ": empty list");
  return out;
}

std::vector<double> get_double_list(const Config& cfg, const std::string& key,
                                    const std::vector<double>& fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  std::vector<double> out;
  for (const std::string& part : split_commas(it->second)) {
    out.push_back(parse_value<double>(
        key, part, [](const std::string& s, std::size_t* used) { return std::stod(s, used); }));
  }
  if (out.empty()) throw std::invalid_argument("config key " + key + ": empty list");
  return out;
}

std::uint64_t config_hash(const Config& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

const char* build_version() { return POISON_BUILD_VERSION; }

void write_manifest(const std::string& path, const std::string& command, const Config& cfg,
                    std::uint64_t seed) {
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

  char hash_hex[19];
  std::snprintf(hash_hex, sizeof(hash_hex), "0x%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));

  nlohmann::json manifest{{"command", command},
                          {"config", cfg},
                          {"config_hash", hash_hex},
                          {"seed", seed},
                          {"version", build_version()},
                          {"timestamp", stamp}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << manifest.dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace poison
