#pragma once

// "key = value" text files. '#' starts a comment; later keys override earlier.

#include "linereg/errors.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace linereg {

class KeyValueConfig {
  public:
    static KeyValueConfig parse(std::istream &is, const std::string &name = "<config>") {
        KeyValueConfig cfg;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            const std::string body = trim(line);
            if (body.empty())
                continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                throw ParseError(name, line_no, "expected 'key = value'");
            const std::string key = trim(body.substr(0, eq));
            if (key.empty())
                throw ParseError(name, line_no, "empty key");
            cfg.values_[key] = trim(body.substr(eq + 1));
        }
        return cfg;
    }

    static KeyValueConfig from_file(const std::string &path) {
        std::ifstream f(path);
        if (!f)
            throw IoError("cannot open config: " + path);
        return parse(f, path);
    }

    bool has(const std::string &key) const { return values_.count(key) != 0; }
    void set(const std::string &key, const std::string &value) { values_[key] = value; }
    const std::map<std::string, std::string> &values() const { return values_; }

    std::optional<std::string> get(const std::string &key) const {
        const auto it = values_.find(key);
        if (it == values_.end())
            return std::nullopt;
        return it->second;
    }

    double get_double(const std::string &key, double fallback) const {
        const auto v = get(key);
        if (!v)
            return fallback;
        try {
            std::size_t used = 0;
            const double d = std::stod(*v, &used);
            if (used != v->size())
                throw std::invalid_argument(*v);
            return d;
        } catch (const std::exception &) {
            throw InvalidInput("config key '" + key + "': not a number: '" + *v + "'");
        }
    }

    long long get_int(const std::string &key, long long fallback) const {
        const auto v = get(key);
        if (!v)
            return fallback;
        try {
            std::size_t used = 0;
            const long long i = std::stoll(*v, &used);
            if (used != v->size())
                throw std::invalid_argument(*v);
            return i;
        } catch (const std::exception &) {
            throw InvalidInput("config key '" + key + "': not an integer: '" + *v + "'");
        }
    }

    std::string get_string(const std::string &key, const std::string &fallback) const {
        return get(key).value_or(fallback);
    }

    void write(std::ostream &os, const std::string &prefix = "") const {
        for (const auto &[k, v] : values_)
            os << prefix << k << " = " << v << '\n';
    }

  private:
    static std::string trim(const std::string &s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos)
            return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> values_;
};

} // namespace linereg
