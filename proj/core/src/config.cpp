#include "fleetsim/config.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fleetsim {

namespace {
std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
}  // namespace

KvConfig parse_kv_stream(std::istream& in) {
    KvConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        cfg[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return cfg;
}

KvConfig parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    return parse_kv_stream(in);
}

std::optional<std::string> kv_get(const KvConfig& cfg, const std::string& key) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return std::nullopt;
    return it->second;
}

std::string kv_get_str(const KvConfig& cfg, const std::string& key, const std::string& dflt) {
    return kv_get(cfg, key).value_or(dflt);
}

double kv_get_double(const KvConfig& cfg, const std::string& key, double dflt) {
    auto v = kv_get(cfg, key);
    if (!v) return dflt;
    std::size_t pos = 0;
    double out = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("bad number for " + key + ": " + *v);
    return out;
}

std::int64_t kv_get_int(const KvConfig& cfg, const std::string& key, std::int64_t dflt) {
    auto v = kv_get(cfg, key);
    if (!v) return dflt;
    std::size_t pos = 0;
    long long out = std::stoll(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("bad integer for " + key + ": " + *v);
    return out;
}

bool kv_get_bool(const KvConfig& cfg, const std::string& key, bool dflt) {
    auto v = kv_get(cfg, key);
    if (!v) return dflt;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw std::invalid_argument("bad boolean for " + key + ": " + *v);
}

}  // namespace fleetsim
