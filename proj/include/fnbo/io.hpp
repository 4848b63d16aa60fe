#pragma once

// Run configurations, CSV tables with reproducibility metadata, JSON reports.
//
// CSV layout:
//   # tool=fnbo <version>
//   # command=<subcommand>
//   # config_hash=<16 hex digits>      FNV-1a of the canonical config
//   # seed=<seed>
//   # config=<canonical config>
//   # <free-form notes>
//   col1,col2,...
//   v1,v2,...                          %.17g, nan for skipped points

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "figures.hpp"
#include "rng.hpp"

namespace fnbo {

inline constexpr const char* kToolVersion = "1.0.0";

inline std::string formatDouble(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parseDouble(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + s + "'");
    }
    if (pos != s.size()) throw ConfigError("not a number: '" + s + "'");
    return v;
}

/// A subcommand with its option values as text. Doubles are stored at 17
/// significant digits so the text form round-trips exactly.
struct RunConfig {
    std::string subcommand;
    std::vector<std::string> positional;
    std::map<std::string, std::string> options;
    std::uint64_t seed = 0;

    void set(const std::string& k, double v) { options[k] = formatDouble(v); }
    void set(const std::string& k, const std::string& v) { options[k] = v; }
    void set(const std::string& k, const char* v) { options[k] = v; }
    void set(const std::string& k, std::uint64_t v) { options[k] = std::to_string(v); }
    void set(const std::string& k, int v) { options[k] = std::to_string(v); }
    void setList(const std::string& k, const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + formatDouble(v[i]);
        options[k] = s;
    }

    /// "subcommand pos...;key=value;..." with keys sorted.
    std::string canonical() const {
        std::string s = subcommand;
        for (const auto& p : positional) s += " " + p;
        for (const auto& [k, v] : options) s += ";" + k + "=" + v;
        return s;
    }

    std::uint64_t hash() const { return fnv1a(canonical()); }

    /// Command-line tokens that reproduce this configuration.
    std::vector<std::string> toArgs() const {
        std::vector<std::string> a{subcommand};
        for (const auto& p : positional) a.push_back(p);
        for (const auto& [k, v] : options) {
            if (k == "flags") {
                std::istringstream is(v);
                std::string f;
                while (is >> f) a.push_back("--" + f);
                continue;
            }
            a.push_back("--" + k);
            std::istringstream is(v);
            std::string tok;
            while (is >> tok) a.push_back(tok);
        }
        return a;
    }

    static RunConfig parseCanonical(const std::string& text) {
        RunConfig c;
        std::vector<std::string> parts;
        std::string cur;
        for (char ch : text) {
            if (ch == ';') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        parts.push_back(cur);
        require(!parts.empty() && !parts[0].empty(), "empty canonical config");
        std::istringstream head(parts[0]);
        head >> c.subcommand;
        std::string p;
        while (head >> p) c.positional.push_back(p);
        for (std::size_t i = 1; i < parts.size(); ++i) {
            const auto eq = parts[i].find('=');
            require(eq != std::string::npos, "malformed config entry '" + parts[i] + "'");
            c.options[parts[i].substr(0, eq)] = parts[i].substr(eq + 1);
        }
        return c;
    }
};

inline std::string hexHash(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

inline void writeCsv(std::ostream& os, const Table& t, const RunConfig& cfg) {
    os << "# tool=fnbo " << kToolVersion << "\n";
    os << "# command=" << cfg.subcommand << "\n";
    os << "# config_hash=" << hexHash(cfg.hash()) << "\n";
    os << "# seed=" << cfg.seed << "\n";
    os << "# config=" << cfg.canonical() << "\n";
    for (const auto& n : t.notes) os << "# " << n << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << formatDouble(r[i]);
        os << "\n";
    }
}

struct CsvFile {
    std::map<std::string, std::string> meta;
    Table table;
    RunConfig config() const {
        const auto it = meta.find("config");
        require(it != meta.end(), "CSV has no config metadata");
        auto c = RunConfig::parseCanonical(it->second);
        const auto s = meta.find("seed");
        if (s != meta.end()) c.seed = std::stoull(s->second);
        return c;
    }
};

inline CsvFile readCsv(std::istream& is) {
    CsvFile f;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto body = line.size() > 2 ? line.substr(2) : std::string();
            const auto eq = body.find('=');
            // key=value metadata has no space before the '='; anything else is a note.
            if (eq != std::string::npos && body.find(' ') > eq)
                f.meta[body.substr(0, eq)] = body.substr(eq + 1);
            else
                f.table.notes.push_back(body);
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!header) {
            f.table.columns = cells;
            header = true;
        } else {
            require(cells.size() == f.table.columns.size(), "CSV row width mismatch");
            std::vector<double> r;
            for (const auto& c : cells) r.push_back(parseDouble(c));
            f.table.rows.push_back(std::move(r));
        }
    }
    require(header, "CSV has no header row");
    if (f.meta.count("config")) {
        const auto h = hexHash(fnv1a(f.meta["config"]));
        require(f.meta.count("config_hash") == 0 || f.meta["config_hash"] == h,
                "config hash does not match embedded config");
    }
    return f;
}

/// Bitwise equality of two tables, NaN cells compared as NaN.
inline bool identicalTables(const Table& a, const Table& b) {
    if (a.columns != b.columns || a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        if (a.rows[i].size() != b.rows[i].size()) return false;
        for (std::size_t j = 0; j < a.rows[i].size(); ++j) {
            const double x = a.rows[i][j], y = b.rows[i][j];
            if (std::isnan(x) && std::isnan(y)) continue;
            if (std::memcmp(&x, &y, sizeof x) != 0) return false;
        }
    }
    return true;
}

}  // namespace fnbo
