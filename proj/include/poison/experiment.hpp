#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace poison {

double mean_of(const std::vector<double>& xs);
/// Sample standard deviation (n-1 denominator); 0 when fewer than two values.
double stddev_of(const std::vector<double>& xs);
/// Median; the mean of the two middle values for even counts.
double median_of(std::vector<double> xs);

/// Flat key=value configuration. '#' starts a comment, blank lines are
/// skipped, keys may not repeat. Serialization is sorted by key, so
/// parse -> serialize -> parse is the identity.
using Config = std::map<std::string, std::string>;

Config parse_config_text(const std::string& text, const std::string& where);
Config parse_config_file(const std::string& path);
std::string serialize_config(const Config& cfg);

/// Rejects keys outside the documented set; unknown keys are never ignored.
void validate_keys(const Config& cfg, const std::set<std::string>& known);

std::string get_string(const Config& cfg, const std::string& key, const std::string& fallback);
bool get_bool(const Config& cfg, const std::string& key, bool fallback);
std::int64_t get_int(const Config& cfg, const std::string& key, std::int64_t fallback);
std::uint64_t get_u64(const Config& cfg, const std::string& key, std::uint64_t fallback);
double get_double(const Config& cfg, const std::string& key, double fallback);
std::vector<std::uint64_t> get_u64_list(const Config& cfg, const std::string& key,
                                        const std::vector<std::uint64_t>& fallback);
std::vector<int> get_int_list(const Config& cfg, const std::string& key,
                              const std::vector<int>& fallback);
std::vector<double> get_double_list(const Config& cfg, const std::string& key,
                                    const std::vector<double>& fallback);

/// FNV-1a over the sorted serialization.
std::uint64_t config_hash(const Config& cfg);

/// Build version baked in at configure time (git describe when available).
const char* build_version();

/// Manifest JSON: command, config, config hash, seed, version, timestamp.
/// The timestamp is the only non-deterministic field any command writes.
void write_manifest(const std::string& path, const std::string& command, const Config& cfg,
                    std::uint64_t seed);

}  // namespace poison
