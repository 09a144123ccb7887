#include "fsolink/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

namespace fsolink {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& key, const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = value.find(',', start);
        std::string item = trim(std::string_view(value).substr(start, comma - start));
        if (item.empty()) throw ConfigError(key, key + ": empty list element");
        out.push_back(std::move(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T v{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    if (!value.empty() && value.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || value.empty()) {
        if constexpr (std::is_floating_point_v<T>) {
            throw ConfigError(key, key + ": expected a number, got '" + value + "'");
        } else {
            throw ConfigError(key, key + ": expected an integer, got '" + value + "'");
        }
    }
    return v;
}

double parse_finite(const std::string& key, const std::string& value) {
    const double v = parse_number<double>(key, value);
    if (!std::isfinite(v)) throw ConfigError(key, key + ": must be finite");
    return v;
}

RealVec parse_grid(const std::string& key, const std::string& value) {
    if (value == "default") return SweepConfig::default_grid();
    if (value.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(value);
        for (std::string part; std::getline(ss, part, ':');) parts.push_back(trim(part));
        if (parts.size() != 3) throw ConfigError(key, key + ": a range is written start:step:stop");
        const double start = parse_finite(key, parts[0]);
        const double step = parse_finite(key, parts[1]);
        const double stop = parse_finite(key, parts[2]);
        if (!(step > 0.0) || stop < start) throw ConfigError(key, key + ": range needs step > 0 and stop >= start");
        const auto n = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (n > 10'000) throw ConfigError(key, key + ": range has too many points");
        RealVec grid;
        for (std::int64_t i = 0; i < n; ++i) grid.push_back(start + static_cast<double>(i) * step);
        return grid;
    }
    RealVec grid;
    for (const auto& item : split_list(key, value)) grid.push_back(parse_finite(key, item));
    return grid;
}

TrainingHyperparams& training_section(ExperimentConfig& cfg) {
    if (!cfg.training) cfg.training.emplace();
    return *cfg.training;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"modulation.order",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.order = parse_number<int>(k, v);
             if (c.order != 4 && c.order != 16 && c.order != 64) throw ConfigError(k, k + ": must be 4, 16 or 64");
         }},
        {"fading.sigma", [](ExperimentConfig& c, const std::string& k,
                            const std::string& v) { c.fading.sigma = parse_finite(k, v); }},
        {"fading.correlation_length", [](ExperimentConfig& c, const std::string& k,
                                         const std::string& v) { c.fading.correlation_length = parse_number<int>(k, v); }},
        {"csi.modes",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.csi_modes.clear();
             for (const auto& item : split_list(k, v)) {
                 CsiMode m{};
                 try {
                     m = csi_mode_from_string(item);
                 } catch (const std::invalid_argument&) {
                     throw ConfigError(k, k + ": unknown mode '" + item + "' (expected perfect or imperfect)");
                 }
                 for (const auto seen : c.csi_modes) {
                     if (seen == m) throw ConfigError(k, k + ": mode '" + item + "' listed twice");
                 }
                 c.csi_modes.push_back(m);
             }
         }},
        {"csi.sigma_e", [](ExperimentConfig& c, const std::string& k,
                           const std::string& v) { c.sigma_e = parse_finite(k, v); }},
        {"csi.assumed_correlation_length",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.assumed_correlation_length = parse_number<int>(k, v);
         }},
        {"detectors",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.run_ml = c.run_dnn = false;
             for (const auto& item : split_list(k, v)) {
                 if (item == "ml") {
                     c.run_ml = true;
                 } else if (item == "dnn") {
                     c.run_dnn = true;
                 } else {
                     throw ConfigError(k, k + ": unknown detector '" + item + "' (expected ml or dnn)");
                 }
             }
         }},
        {"training",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             if (v != "default") throw ConfigError(k, k + ": the only accepted value is 'default'");
             training_section(c);
         }},
        {"training.hidden_layers", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             training_section(c).hidden_layers = parse_number<int>(k, v);
         }},
        {"training.neurons_per_layer", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             training_section(c).neurons_per_layer = parse_number<int>(k, v);
         }},
        {"training.iterations", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             training_section(c).iterations = parse_number<int>(k, v);
         }},
        {"training.sample_to_batch_ratio", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             training_section(c).sample_to_batch_ratio = parse_number<int>(k, v);
         }},
        {"training.set_size", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             training_section(c).training_set_size = parse_number<int>(k, v);
         }},
        {"training.learning_rate", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             training_section(c).learning_rate = parse_finite(k, v);
         }},
        {"training.snr_policy",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             try {
                 training_section(c).snr_policy = snr_policy_from_string(v);
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(k, k + ": " + e.what());
             }
         }},
        {"sweep.esn0_db", [](ExperimentConfig& c, const std::string& k,
                             const std::string& v) { c.sweep.esn0_grid_db = parse_grid(k, v); }},
        {"sweep.min_errors", [](ExperimentConfig& c, const std::string& k,
                                const std::string& v) { c.sweep.min_errors = parse_number<std::int64_t>(k, v); }},
        {"sweep.max_symbols", [](ExperimentConfig& c, const std::string& k,
                                 const std::string& v) { c.sweep.max_symbols = parse_number<std::int64_t>(k, v); }},
        {"sweep.frame_length", [](ExperimentConfig& c, const std::string& k,
                                  const std::string& v) { c.sweep.frame_length = parse_number<std::int64_t>(k, v); }},
        {"output.dir",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             if (v.empty()) throw ConfigError(k, k + ": must not be empty");
             c.output_dir = v;
         }},
        {"modem.dc_bias", [](ExperimentConfig& c, const std::string& k,
                             const std::string& v) { c.dc_bias = parse_finite(k, v); }},
        {"seed", [](ExperimentConfig& c, const std::string& k,
                    const std::string& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
    };
    return table;
}

// Runs a library validator. Its messages start with the key they concern
// when there is one; otherwise the complaint is filed under `fallback`.
template <typename F>
void check(const std::string& fallback, F&& f) {
    try {
        f();
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        for (const auto& entry : setters()) {
            if (what.rfind(entry.first + " ", 0) == 0) throw ConfigError(entry.first, what);
        }
        throw ConfigError(fallback, fallback + ": " + what);
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

LinkConfig ExperimentConfig::link(CsiMode mode) const {
    LinkConfig l;
    l.order = order;
    l.fading = fading;
    l.dc_bias = dc_bias;
    if (mode == CsiMode::Imperfect) l.csi = CsiConfig{CsiMode::Imperfect, sigma_e, assumed_correlation_length};
    return l;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::resolved() const {
    auto join = [](const auto& items, auto&& fmt) {
        std::string s;
        for (const auto& it : items) {
            if (!s.empty()) s += ", ";
            s += fmt(it);
        }
        return s;
    };
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("modulation.order", std::to_string(order));
    kv.emplace_back("modem.dc_bias", format_double(dc_bias));
    kv.emplace_back("fading.sigma", format_double(fading.sigma));
    kv.emplace_back("fading.correlation_length", std::to_string(fading.correlation_length));
    kv.emplace_back("csi.modes", join(csi_modes, [](CsiMode m) { return std::string(to_string(m)); }));
    kv.emplace_back("csi.sigma_e", format_double(sigma_e));
    kv.emplace_back("csi.assumed_correlation_length", std::to_string(assumed_correlation_length));
    std::vector<std::string> dets;
    if (run_ml) dets.emplace_back("ml");
    if (run_dnn) dets.emplace_back("dnn");
    kv.emplace_back("detectors", join(dets, [](const std::string& s) { return s; }));
    if (training) {
        kv.emplace_back("training.hidden_layers", std::to_string(training->hidden_layers));
        kv.emplace_back("training.neurons_per_layer", std::to_string(training->neurons_per_layer));
        kv.emplace_back("training.iterations", std::to_string(training->iterations));
        kv.emplace_back("training.sample_to_batch_ratio", std::to_string(training->sample_to_batch_ratio));
        kv.emplace_back("training.set_size", std::to_string(training->training_set_size));
        kv.emplace_back("training.learning_rate", format_double(training->learning_rate));
        kv.emplace_back("training.snr_policy", std::string(to_string(training->snr_policy)));
    }
    kv.emplace_back("sweep.esn0_db", join(sweep.esn0_grid_db, format_double));
    kv.emplace_back("sweep.min_errors", std::to_string(sweep.min_errors));
    kv.emplace_back("sweep.max_symbols", std::to_string(sweep.max_symbols));
    kv.emplace_back("sweep.frame_length", std::to_string(sweep.frame_length));
    kv.emplace_back("output.dir", output_dir);
    kv.emplace_back("seed", std::to_string(seed));
    return kv;
}

std::string ExperimentConfig::to_text() const {
    std::string out;
    for (const auto& [k, v] : resolved()) out += k + " = " + v + "\n";
    return out;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    bool sigma_e_given = false;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ConfigError("", "line " + std::to_string(line_no) + ": missing key");
        const auto it = setters().find(key);
        if (it == setters().end()) {
            throw ConfigError(key, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        if (!seen.insert(key).second) {
            throw ConfigError(key, "line " + std::to_string(line_no) + ": key '" + key + "' given twice");
        }
        if (value.empty()) throw ConfigError(key, "line " + std::to_string(line_no) + ": " + key + " has no value");
        it->second(cfg, key, value);
        if (key == "csi.sigma_e") sigma_e_given = true;
    }

    for (const char* required : {"modulation.order", "fading.sigma", "sweep.esn0_db", "seed"}) {
        if (seen.count(required) == 0) throw ConfigError(required, std::string("missing required key '") + required + "'");
    }

    if (!sigma_e_given) cfg.sigma_e = cfg.fading.sigma / 2.0;
    cfg.sweep.master_seed = cfg.seed;

    check("fading", [&] { cfg.fading.validate(); });
    check("modem.dc_bias", [&] { cfg.link(CsiMode::Perfect).validate(); });
    if (std::find(cfg.csi_modes.begin(), cfg.csi_modes.end(), CsiMode::Imperfect) != cfg.csi_modes.end()) {
        check(sigma_e_given ? "csi.sigma_e" : "csi.assumed_correlation_length",
              [&] { cfg.link(CsiMode::Imperfect).validate(); });
    }
    if (!cfg.run_ml && !cfg.run_dnn) throw ConfigError("detectors", "detectors: at least one of ml, dnn is required");
    if (cfg.run_dnn && !cfg.training) {
        throw ConfigError("training", "detectors includes dnn but the config has no training section "
                                      "(add 'training = default' or training.* keys)");
    }
    if (cfg.training) check("training", [&] { cfg.training->validate(); });
    check("sweep", [&] { cfg.sweep.validate(cfg.fading.correlation_length); });
    return cfg;
}

}  // namespace fsolink
