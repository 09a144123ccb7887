#include "fsolink/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include <json.hpp>

namespace fsolink {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fixed(double v, int digits = 2) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

template <typename T>
bool parse_exact(const std::string& s, T& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

constexpr const char* kCsvHeader = "esn0_db,errors,trials,ser,ci_low,ci_high";

}  // namespace

std::string write_csv(const SerCurve& curve, const std::vector<std::pair<std::string, std::string>>& extra) {
    std::string out;
    out += "# detector=" + std::string(to_string(curve.detector)) + "\n";
    out += "# csi=" + std::string(to_string(curve.csi)) + "\n";
    out += "# sigma=" + g17(curve.sigma) + "\n";
    out += "# correlation_length=" + std::to_string(curve.correlation_length) + "\n";
    out += "# digest=" + curve.digest + "\n";
    for (const auto& [k, v] : extra) out += "# " + k + "=" + v + "\n";
    out += kCsvHeader;
    out += "\n";
    for (const auto& p : curve.points) {
        out += g17(p.esn0_db) + "," + std::to_string(p.errors) + "," + std::to_string(p.trials) + "," + g17(p.ser) +
               "," + g17(p.ci_low) + "," + g17(p.ci_high) + "\n";
    }
    return out;
}

SerCurve parse_csv(const std::string& text, const std::string& source) {
    SerCurve c;
    bool have_detector = false;
    bool have_csi = false;
    bool have_header = false;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (have_header) throw CsvError(source, n, "metadata after the header");
            const auto body = line.substr(line.find_first_not_of("# "));
            const auto eq = body.find('=');
            if (eq == std::string::npos) throw CsvError(source, n, "metadata line without '='");
            const std::string key = body.substr(0, eq);
            const std::string value = body.substr(eq + 1);
            try {
                if (key == "detector") {
                    c.detector = detector_kind_from_string(value);
                    have_detector = true;
                } else if (key == "csi") {
                    c.csi = csi_mode_from_string(value);
                    have_csi = true;
                } else if (key == "sigma") {
                    if (!parse_exact(value, c.sigma)) throw std::invalid_argument("bad sigma '" + value + "'");
                } else if (key == "correlation_length") {
                    if (!parse_exact(value, c.correlation_length)) {
                        throw std::invalid_argument("bad correlation_length '" + value + "'");
                    }
                } else if (key == "digest") {
                    c.digest = value;
                }
            } catch (const std::invalid_argument& e) {
                throw CsvError(source, n, e.what());
            }
            continue;
        }
        if (!have_header) {
            if (line != kCsvHeader) throw CsvError(source, n, std::string("expected header '") + kCsvHeader + "'");
            have_header = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 6) throw CsvError(source, n, "expected 6 fields, got " + std::to_string(f.size()));
        SerPoint p;
        if (!parse_exact(f[0], p.esn0_db) || !parse_exact(f[1], p.errors) || !parse_exact(f[2], p.trials) ||
            !parse_exact(f[3], p.ser) || !parse_exact(f[4], p.ci_low) || !parse_exact(f[5], p.ci_high)) {
            throw CsvError(source, n, "unparseable field");
        }
        if (p.trials < 1 || p.errors < 0 || p.errors > p.trials) {
            throw CsvError(source, n, "errors and trials must satisfy 0 <= errors <= trials, trials >= 1");
        }
        if (!(p.ser >= 0.0 && p.ser <= 1.0) || !(p.ci_low <= p.ser && p.ser <= p.ci_high)) {
            throw CsvError(source, n, "ser must lie in [0, 1] inside its interval");
        }
        c.points.push_back(p);
    }
    if (!have_detector || !have_csi) throw CsvError(source, n, "missing '# detector=' or '# csi=' metadata");
    if (!have_header) throw CsvError(source, n, "missing header");
    return c;
}

std::string render_svg(const std::vector<SerCurve>& curves, std::vector<std::string>& warnings) {
    static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    constexpr double kWidth = 820, kHeight = 520;
    constexpr double kLeft = 80, kRight = 600, kTop = 30, kBottom = 460;

    double x_min = INFINITY, x_max = -INFINITY, y_min = INFINITY, y_max = -INFINITY;
    std::vector<std::vector<SerPoint>> plotted(curves.size());
    for (std::size_t i = 0; i < curves.size(); ++i) {
        for (const auto& p : curves[i].points) {
            if (!(p.ser > 0.0)) {
                warnings.push_back("curve '" + curves[i].label() + "': SER is 0 at " + g17(p.esn0_db) +
                                   " dB; point omitted from the log plot");
                continue;
            }
            plotted[i].push_back(p);
            x_min = std::min(x_min, p.esn0_db);
            x_max = std::max(x_max, p.esn0_db);
            y_min = std::min(y_min, p.ci_low > 0.0 ? p.ci_low : p.ser);
            y_max = std::max(y_max, p.ci_high);
        }
    }
    if (!std::isfinite(x_min)) {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 1e-3;
        y_max = 1.0;
    }
    if (x_max == x_min) {
        x_min -= 1.0;
        x_max += 1.0;
    }
    const int dec_lo = static_cast<int>(std::floor(std::log10(y_min)));
    int dec_hi = static_cast<int>(std::ceil(std::log10(y_max)));
    if (dec_hi <= dec_lo) dec_hi = dec_lo + 1;

    auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * (kRight - kLeft); };
    auto py = [&](double y) {
        const double l = y > 0.0 ? std::log10(y) : static_cast<double>(dec_lo);
        const double t = (std::clamp(l, static_cast<double>(dec_lo), static_cast<double>(dec_hi)) - dec_lo) /
                         (dec_hi - dec_lo);
        return kBottom - t * (kBottom - kTop);
    };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    s << "<g class=\"axes\" stroke=\"black\">\n";
    s << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight << "\" y2=\"" << kBottom << "\"/>\n";
    s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kBottom << "\"/>\n";
    s << "</g>\n<g class=\"grid\" stroke=\"#dddddd\">\n";
    for (int d = dec_lo; d <= dec_hi; ++d) {
        const double y = py(std::pow(10.0, d));
        s << "<line x1=\"" << kLeft << "\" y1=\"" << fixed(y) << "\" x2=\"" << kRight << "\" y2=\"" << fixed(y)
          << "\"/>\n";
    }
    s << "</g>\n<g class=\"ticks\">\n";
    for (int d = dec_lo; d <= dec_hi; ++d) {
        s << "<text x=\"" << kLeft - 8 << "\" y=\"" << fixed(py(std::pow(10.0, d)) + 4)
          << "\" text-anchor=\"end\">1e" << d << "</text>\n";
    }
    const int x_ticks = 6;
    for (int t = 0; t <= x_ticks; ++t) {
        const double x = x_min + (x_max - x_min) * t / x_ticks;
        s << "<text x=\"" << fixed(px(x)) << "\" y=\"" << kBottom + 18 << "\" text-anchor=\"middle\">" << fixed(x, 1)
          << "</text>\n";
    }
    s << "</g>\n";
    s << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kBottom + 42
      << "\" text-anchor=\"middle\">Es/N0 (dB)</text>\n";
    s << "<text x=\"20\" y=\"" << (kTop + kBottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << (kTop + kBottom) / 2 << ")\">SER</text>\n";

    for (std::size_t i = 0; i < curves.size(); ++i) {
        const char* color = kColors[i % std::size(kColors)];
        s << "<g class=\"curve\">\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < plotted[i].size(); ++k) {
            if (k > 0) s << ' ';
            s << fixed(px(plotted[i][k].esn0_db)) << ',' << fixed(py(plotted[i][k].ser));
        }
        s << "\"/>\n";
        for (const auto& p : plotted[i]) {
            const double x = px(p.esn0_db);
            const double y_lo = py(p.ci_low);
            const double y_hi = py(p.ci_high);
            s << "<g class=\"whisker\" stroke=\"" << color << "\">"
              << "<line x1=\"" << fixed(x) << "\" y1=\"" << fixed(y_lo) << "\" x2=\"" << fixed(x) << "\" y2=\""
              << fixed(y_hi) << "\"/>"
              << "<line x1=\"" << fixed(x - 3) << "\" y1=\"" << fixed(y_lo) << "\" x2=\"" << fixed(x + 3) << "\" y2=\""
              << fixed(y_lo) << "\"/>"
              << "<line x1=\"" << fixed(x - 3) << "\" y1=\"" << fixed(y_hi) << "\" x2=\"" << fixed(x + 3) << "\" y2=\""
              << fixed(y_hi) << "\"/></g>\n";
            s << "<circle cx=\"" << fixed(x) << "\" cy=\"" << fixed(py(p.ser)) << "\" r=\"2.5\" fill=\"" << color
              << "\"/>\n";
        }
        s << "</g>\n";
        const double ly = kTop + 10 + 20.0 * static_cast<double>(i);
        s << "<g class=\"legend\"><line x1=\"" << kRight + 15 << "\" y1=\"" << fixed(ly) << "\" x2=\"" << kRight + 40
          << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << kRight + 46
          << "\" y=\"" << fixed(ly + 4) << "\">" << xml_escape(curves[i].label()) << "</text></g>\n";
    }
    s << "</svg>\n";
    return s.str();
}

// ---------------------------------------------------------------------------
// Model container

namespace {

constexpr char kMagic[8] = {'F', 'S', 'O', 'L', 'N', 'K', 'M', 'D'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
public:
    explicit Reader(const std::string& b, std::size_t end) : bytes_(b), end_(end) {}
    std::uint64_t u64() { return uint(8); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string take(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    [[nodiscard]] std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (n > end_ - pos_) throw IntegrityError("model file is truncated");
    }
    std::uint64_t uint(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        }
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    const std::string& bytes_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

std::uint64_t fnv(const std::string& s, std::size_t n) {
    Fnv1a f;
    f.update(s.data(), n);
    return f.value();
}

nlohmann::ordered_json link_json(const LinkConfig& l) {
    return {{"order", l.order},
            {"fading_sigma", format_double(l.fading.sigma)},
            {"correlation_length", l.fading.correlation_length},
            {"csi", std::string(to_string(l.csi.mode))},
            {"sigma_e", format_double(l.csi.sigma_e)},
            {"assumed_correlation_length", l.csi.assumed_correlation_length},
            {"dc_bias", format_double(l.dc_bias)}};
}

double json_double(const nlohmann::json& j) {
    const auto s = j.get<std::string>();
    double v = 0.0;
    if (!parse_exact(s, v)) throw IntegrityError("model header holds a malformed number '" + s + "'");
    return v;
}

LinkConfig link_from_json(const nlohmann::json& j) {
    LinkConfig l;
    l.order = j.at("order").get<int>();
    l.fading.sigma = json_double(j.at("fading_sigma"));
    l.fading.correlation_length = j.at("correlation_length").get<int>();
    l.csi.mode = csi_mode_from_string(j.at("csi").get<std::string>());
    l.csi.sigma_e = json_double(j.at("sigma_e"));
    l.csi.assumed_correlation_length = j.at("assumed_correlation_length").get<int>();
    l.dc_bias = json_double(j.at("dc_bias"));
    return l;
}

}  // namespace

std::string serialize_model(const TrainedDetector& d) {
    if (!d.trained()) throw InvalidState("serialize_model: detector has not been trained");
    const auto& hp = d.meta.hyperparams;
    nlohmann::ordered_json h;
    h["format"] = "fsolink-model";
    h["library_version"] = std::string(kVersion);
    h["constellation_order"] = d.constellation_order;
    h["layer_sizes"] = d.params.layer_sizes;
    h["digest"] = d.meta.digest;
    h["seed"] = std::to_string(d.meta.seed);
    h["hyperparams"] = {{"hidden_layers", hp.hidden_layers},
                        {"neurons_per_layer", hp.neurons_per_layer},
                        {"iterations", hp.iterations},
                        {"sample_to_batch_ratio", hp.sample_to_batch_ratio},
                        {"set_size", hp.training_set_size},
                        {"learning_rate", format_double(hp.learning_rate)},
                        {"snr_policy", std::string(to_string(hp.snr_policy))}};
    h["link"] = link_json(d.meta.link);
    std::vector<std::string> esn0;
    for (const double e : d.meta.training_esn0_db) esn0.push_back(format_double(e));
    h["training_esn0_db"] = esn0;
    h["loss_history_length"] = d.meta.loss_history.size();
    const std::string header = h.dump();

    RealVec payload;
    payload.insert(payload.end(), d.feature_mean.begin(), d.feature_mean.end());
    payload.insert(payload.end(), d.feature_std.begin(), d.feature_std.end());
    for (std::size_t l = 0; l < d.params.num_layers(); ++l) {
        payload.insert(payload.end(), d.params.weights[l].values().begin(), d.params.weights[l].values().end());
        payload.insert(payload.end(), d.params.biases[l].begin(), d.params.biases[l].end());
    }
    payload.insert(payload.end(), d.meta.loss_history.begin(), d.meta.loss_history.end());

    std::string out(kMagic, sizeof kMagic);
    put_u32(out, kFormatVersion);
    put_u64(out, header.size());
    out += header;
    put_u64(out, payload.size());
    for (const double v : payload) put_u64(out, std::bit_cast<std::uint64_t>(v));
    put_u64(out, fnv(out, out.size()));
    return out;
}

TrainedDetector deserialize_model(const std::string& bytes) {
    if (bytes.size() < sizeof kMagic + 4 + 8 + 8 + 8) throw IntegrityError("model file is truncated");
    const std::size_t body = bytes.size() - 8;
    Reader trailer(bytes, bytes.size());
    trailer.take(body);
    if (trailer.u64() != fnv(bytes, body)) throw IntegrityError("model file checksum mismatch");

    Reader r(bytes, body);
    if (r.take(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw IntegrityError("not a model file");
    if (const auto v = r.u32(); v != kFormatVersion) {
        throw IntegrityError("unsupported model format version " + std::to_string(v));
    }
    const std::uint64_t header_len = r.u64();
    if (header_len > body) throw IntegrityError("model header length out of range");
    const std::string header = r.take(header_len);

    TrainedDetector d;
    std::size_t loss_len = 0;
    try {
        const auto h = nlohmann::json::parse(header);
        if (h.at("format").get<std::string>() != "fsolink-model") throw IntegrityError("not a model file");
        d.constellation_order = h.at("constellation_order").get<int>();
        d.params.layer_sizes = h.at("layer_sizes").get<std::vector<int>>();
        d.meta.digest = h.at("digest").get<std::string>();
        const auto seed_text = h.at("seed").get<std::string>();
        if (!parse_exact(seed_text, d.meta.seed)) throw IntegrityError("model header holds a malformed seed");
        const auto& hp = h.at("hyperparams");
        auto& m = d.meta.hyperparams;
        m.hidden_layers = hp.at("hidden_layers").get<int>();
        m.neurons_per_layer = hp.at("neurons_per_layer").get<int>();
        m.iterations = hp.at("iterations").get<int>();
        m.sample_to_batch_ratio = hp.at("sample_to_batch_ratio").get<int>();
        m.training_set_size = hp.at("set_size").get<int>();
        m.learning_rate = json_double(hp.at("learning_rate"));
        m.snr_policy = snr_policy_from_string(hp.at("snr_policy").get<std::string>());
        d.meta.link = link_from_json(h.at("link"));
        for (const auto& e : h.at("training_esn0_db")) d.meta.training_esn0_db.push_back(json_double(e));
        loss_len = h.at("loss_history_length").get<std::size_t>();
    } catch (const IntegrityError&) {
        throw;
    } catch (const std::exception& e) {
        throw IntegrityError(std::string("model header is malformed: ") + e.what());
    }

    const auto& sizes = d.params.layer_sizes;
    if (sizes.size() < 2 || sizes.front() != 2 || sizes.back() != d.constellation_order) {
        throw IntegrityError("model layer sizes are inconsistent");
    }
    std::size_t expected = 4 + loss_len;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        if (sizes[l] < 1 || sizes[l + 1] < 1 || sizes[l] > 1'000'000 || sizes[l + 1] > 1'000'000) {
            throw IntegrityError("model layer sizes are out of range");
        }
        expected += static_cast<std::size_t>(sizes[l + 1]) * (static_cast<std::size_t>(sizes[l]) + 1);
    }
    const std::uint64_t count = r.u64();
    if (count != expected || count * 8 != body - r.pos()) throw IntegrityError("model payload size mismatch");

    for (auto& v : d.feature_mean) v = r.f64();
    for (auto& v : d.feature_std) v = r.f64();
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const auto n_out = static_cast<std::size_t>(sizes[l + 1]);
        const auto n_in = static_cast<std::size_t>(sizes[l]);
        Matrix w(n_out, n_in);
        for (auto& v : w.values()) v = r.f64();
        RealVec b(n_out);
        for (auto& v : b) v = r.f64();
        d.params.weights.push_back(std::move(w));
        d.params.biases.push_back(std::move(b));
    }
    d.meta.loss_history.resize(loss_len);
    for (auto& v : d.meta.loss_history) v = r.f64();
    return d;
}

// ---------------------------------------------------------------------------
// Manifest

std::string build_manifest(const ExperimentConfig& cfg, const std::string& source_text, const std::string& command,
                           const std::vector<ManifestOutput>& outputs) {
    nlohmann::ordered_json m;
    m["tool"] = "fsolink";
    m["library_version"] = std::string(kVersion);
    m["command"] = command;
    m["seed"] = std::to_string(cfg.seed);
    nlohmann::ordered_json resolved = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg.resolved()) resolved[k] = v;
    m["resolved_config"] = resolved;
    m["config_text"] = cfg.to_text();
    m["source_config"] = source_text;
    m["conventions"] = {
        {"es", "unit average constellation energy, DC bias excluded"},
        {"n0", "total complex noise variance, N0 = 10^(-EsN0/10)"},
        {"stopping_rule", "every detector reaches sweep.min_errors errors or sweep.max_symbols symbols are sent"},
        {"interval", "95% Wilson score, z = 1.96"},
        {"pairing", "all detectors and CSI modes at a grid point share symbols, gains and noise"},
        {"point_seed", "splitmix64 derivation from (seed, grid index)"},
        {"imperfect_csi", "h_hat = h(start of assumed block) * exp(e), e ~ N(0, sigma_e^2) per assumed block"},
    };
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& o : outputs) {
        nlohmann::ordered_json f;
        f["file"] = o.file;
        f["detector"] = std::string(to_string(o.curve.detector));
        f["csi"] = std::string(to_string(o.curve.csi));
        f["digest"] = o.curve.digest;
        f["points"] = o.curve.points.size();
        std::vector<std::string> sums;
        for (const auto s : o.stream_checksums) sums.push_back(to_hex(s));
        f["stream_checksums"] = sums;
        for (const auto& [k, v] : o.extra) f[k] = v;
        files.push_back(f);
    }
    m["outputs"] = files;
    return m.dump(2) + "\n";
}

ManifestInput read_manifest(const std::string& manifest_json) {
    try {
        const auto m = nlohmann::json::parse(manifest_json);
        return {m.at("config_text").get<std::string>(), m.at("source_config").get<std::string>()};
    } catch (const std::exception& e) {
        throw ConfigError("", std::string("manifest is malformed: ") + e.what());
    }
}

}  // namespace fsolink
