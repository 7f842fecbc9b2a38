#pragma once

#include "skewgraph/rational.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace skewgraph {

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Line-oriented experiment config: one `key = value...` binding per line,
/// dotted keys for grouping, `#` comments. Values are whitespace-separated
/// tokens with `;` as a standalone row separator, so matrices fit on one
/// line. Rationals are written `p/q` or as plain decimals. Duplicate keys
/// are an error so a typo cannot silently shadow an earlier binding.
class Config {
  public:
    Config() = default;

    static Config parse_string(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string::size_type hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            std::string::size_type eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": expected `key = value`");
            std::string key = trim(trimmed.substr(0, eq));
            if (!valid_key(key))
                throw ConfigError("line " + std::to_string(lineno) + ": bad key `" + key +
                                  "`");
            if (cfg.entries_.count(key))
                throw ConfigError("line " + std::to_string(lineno) + ": duplicate key `" +
                                  key + "` (first set on line " +
                                  std::to_string(cfg.lines_.at(key)) + ")");
            cfg.entries_[key] = tokenize(trimmed.substr(eq + 1));
            cfg.lines_[key] = lineno;
        }
        return cfg;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_string(buf.str());
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    /// Replaces or creates a binding; used for command-line overrides.
    void set(const std::string& key, std::vector<std::string> value_tokens) {
        if (!valid_key(key)) throw ConfigError("bad key `" + key + "`");
        entries_[key] = std::move(value_tokens);
        if (!lines_.count(key)) lines_[key] = 0;
    }

    const std::vector<std::string>& tokens(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError("missing key `" + key + "`");
        used_.insert(key);
        return it->second;
    }

    std::string get_string(const std::string& key) const {
        const auto& t = tokens(key);
        if (t.size() != 1)
            throw ConfigError("key `" + key + "` expects exactly one value");
        return t[0];
    }

    std::string get_string_or(const std::string& key, const std::string& def) const {
        return has(key) ? get_string(key) : def;
    }

    std::int64_t get_int(const std::string& key) const {
        return parse_int(key, get_string(key));
    }

    std::int64_t get_int_or(const std::string& key, std::int64_t def) const {
        return has(key) ? get_int(key) : def;
    }

    std::uint64_t get_uint64(const std::string& key) const {
        std::string s = get_string(key);
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size())
            throw ConfigError("key `" + key + "`: `" + s +
                              "` is not an unsigned integer");
        return v;
    }

    double get_double(const std::string& key) const {
        return parse_double(key, get_string(key));
    }

    double get_double_or(const std::string& key, double def) const {
        return has(key) ? get_double(key) : def;
    }

    Rational get_rational(const std::string& key) const {
        return parse_rational_token(key, get_string(key));
    }

    Rational get_rational_or(const std::string& key, const Rational& def) const {
        return has(key) ? get_rational(key) : def;
    }

    std::vector<std::int64_t> get_ints(const std::string& key) const {
        const auto& t = tokens(key);
        if (t.empty()) throw ConfigError("key `" + key + "` has no values");
        std::vector<std::int64_t> out;
        out.reserve(t.size());
        for (const std::string& s : t) out.push_back(parse_int(key, s));
        return out;
    }

    std::vector<double> get_doubles(const std::string& key) const {
        const auto& t = tokens(key);
        if (t.empty()) throw ConfigError("key `" + key + "` has no values");
        std::vector<double> out;
        out.reserve(t.size());
        for (const std::string& s : t) out.push_back(parse_double(key, s));
        return out;
    }

    std::vector<Rational> get_rationals(const std::string& key) const {
        const auto& t = tokens(key);
        if (t.empty()) throw ConfigError("key `" + key + "` has no values");
        std::vector<Rational> out;
        out.reserve(t.size());
        for (const std::string& s : t) out.push_back(parse_rational_token(key, s));
        return out;
    }

    /// Rows separated by `;`, entries as decimals.
    std::vector<std::vector<double>> get_matrix(const std::string& key) const {
        const auto& t = tokens(key);
        std::vector<std::vector<double>> rows(1);
        for (const std::string& s : t) {
            if (s == ";")
                rows.emplace_back();
            else
                rows.back().push_back(parse_double(key, s));
        }
        if (rows.back().empty()) rows.pop_back();
        if (rows.empty()) throw ConfigError("key `" + key + "` has no matrix rows");
        return rows;
    }

    std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
        std::vector<std::string> out;
        for (auto it = entries_.lower_bound(prefix); it != entries_.end(); ++it) {
            if (it->first.compare(0, prefix.size(), prefix) != 0) break;
            out.push_back(it->first);
        }
        return out;
    }

    int line_of(const std::string& key) const {
        auto it = lines_.find(key);
        return it == lines_.end() ? 0 : it->second;
    }

    /// All bindings in key order; provenance embedding, not value access.
    const std::map<std::string, std::vector<std::string>>& items() const {
        return entries_;
    }

    /// Keys never read through an accessor; validation reports them as typos.
    std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

    /// Sorted `key = tokens` lines, the provenance-hash input.
    std::string canonical_text() const {
        std::string out;
        for (const auto& [k, toks] : entries_) {
            out += k;
            out += " =";
            for (const std::string& t : toks) {
                out += ' ';
                out += t;
            }
            out += '\n';
        }
        return out;
    }

  private:
    static std::string trim(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    static bool valid_key(const std::string& key) {
        if (key.empty()) return false;
        for (char c : key) {
            bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
                      c == '_' || c == '-';
            if (!ok) return false;
        }
        return true;
    }

    static std::vector<std::string> tokenize(const std::string& value) {
        std::vector<std::string> out;
        std::string cur;
        auto flush = [&] {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        };
        for (char c : value) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                flush();
            } else if (c == ';') {
                flush();
                out.emplace_back(";");
            } else {
                cur += c;
            }
        }
        flush();
        return out;
    }

    static std::int64_t parse_int(const std::string& key, const std::string& s) {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size())
            throw ConfigError("key `" + key + "`: `" + s + "` is not an integer");
        return v;
    }

    static double parse_double(const std::string& key, const std::string& s) {
        if (s.find('/') != std::string::npos) {
            Rational r = parse_rational_token(key, s);
            return to_double(r);
        }
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size() || s.empty())
            throw ConfigError("key `" + key + "`: `" + s + "` is not a number");
        return v;
    }

    static Rational parse_rational_token(const std::string& key, const std::string& s) {
        try {
            return parse_rational(s);
        } catch (const std::exception& e) {
            throw ConfigError("key `" + key + "`: " + e.what());
        }
    }

    std::map<std::string, std::vector<std::string>> entries_;
    std::map<std::string, int> lines_;
    mutable std::set<std::string> used_;
};

}  // namespace skewgraph
