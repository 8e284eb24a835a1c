#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "mandate/common.hpp"

namespace mandate {

// Flat key = value experiment configuration. Precedence: command-line flags
// over config file over defaults. Unknown keys are rejected so typos fail
// loudly, and the fully resolved set is echoed next to every run's outputs.
class RunConfig {
public:
    static const std::map<std::string, std::string>& defaults() {
        static const std::map<std::string, std::string> d = {
            {"data", ""},
            {"out", ""},
            {"seed", "7"},
            {"epochs", "200"},
            {"patience", "20"},
            {"lr", "0.003"},
            {"batch_size", "256"},
            {"monitor", "auc"},
            {"k", "2"},
            {"anchors", "512"},
            {"hidden", "48"},
            {"pos_dim", "48"},
            {"layers", "1"},
            {"heads", "4"},
            {"lambda_orth", "0.01"},
            {"dropout", "0.2"},
            {"attention_cap", "2048"},
            {"pe_mode", "learned"},
            {"ppr_alpha", "0.15"},
            {"orth_mode", "cos2"},
            {"train_ratio", "0.4"},
            {"val_ratio", "0.2"},
            {"test_ratio", "0.4"},
            {"pe_dir", ""},
            {"ablation_seeds", "3"},
        };
        return d;
    }

    RunConfig() : values_(defaults()) {}

    void set(const std::string& key, const std::string& value) {
        if (!defaults().count(key))
            throw UsageError("unknown config key '" + key + "'");
        values_[key] = value;
    }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open config file: " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const std::size_t eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw UsageError(path + ":" + std::to_string(lineno) +
                                 ": expected 'key = value'");
            set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
        }
    }

    const std::string& get_str(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key) const {
        const std::string& s = get_str(key);
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw UsageError("config key '" + key + "': '" + s + "' is not a number");
        }
    }

    std::size_t get_size(const std::string& key) const {
        const std::string& s = get_str(key);
        try {
            std::size_t used = 0;
            const long long v = std::stoll(s, &used);
            if (used != s.size() || v < 0) throw std::invalid_argument(s);
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw UsageError("config key '" + key + "': '" + s +
                             "' is not a nonnegative integer");
        }
    }

    std::uint64_t get_u64(const std::string& key) const {
        const std::string& s = get_str(key);
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return static_cast<std::uint64_t>(v);
        } catch (const std::exception&) {
            throw UsageError("config key '" + key + "': '" + s +
                             "' is not an unsigned integer");
        }
    }

    std::string resolved_text() const {
        std::ostringstream out;
        for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
        return out.str();
    }

    void write_resolved(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write resolved config: " + path);
        out << resolved_text();
    }

private:
    std::map<std::string, std::string> values_;

    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t\r\n");
        std::size_t e = s.find_last_not_of(" \t\r\n");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
};

}  // namespace mandate
