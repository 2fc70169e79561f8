#pragma once
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace fleetsim {

// Flat key=value configuration text: one pair per line, '#' comments, blank
// lines ignored. Keys and values are trimmed.
using KvConfig = std::map<std::string, std::string>;

KvConfig parse_kv_file(const std::string& path);
KvConfig parse_kv_stream(std::istream& in);

std::optional<std::string> kv_get(const KvConfig& cfg, const std::string& key);
std::string kv_get_str(const KvConfig& cfg, const std::string& key, const std::string& dflt);
// Throw std::invalid_argument on malformed numerics.
double kv_get_double(const KvConfig& cfg, const std::string& key, double dflt);
std::int64_t kv_get_int(const KvConfig& cfg, const std::string& key, std::int64_t dflt);
bool kv_get_bool(const KvConfig& cfg, const std::string& key, bool dflt);

}  // namespace fleetsim
