#include "fsolink/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fsolink/config.hpp"
#include "fsolink/io.hpp"

namespace fsolink {

namespace fs = std::filesystem;

LogLevel log_level_from_env() {
    const char* v = std::getenv("FSOLINK_LOG");
    const std::string s = v != nullptr ? v : "";
    if (s == "quiet") return LogLevel::Quiet;
    if (s == "warn") return LogLevel::Warn;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

namespace {

class Log {
public:
    explicit Log(const CommandContext& ctx) : ctx_(ctx) {}
    void error(const std::string& m) const { emit(LogLevel::Quiet, "error: ", m); }
    void warn(const std::string& m) const { emit(LogLevel::Warn, "warning: ", m); }
    void info(const std::string& m) const { emit(LogLevel::Info, "", m); }
    void debug(const std::string& m) const { emit(LogLevel::Debug, "debug: ", m); }

private:
    void emit(LogLevel at, const char* prefix, const std::string& m) const {
        if (ctx_.log != nullptr && (at == LogLevel::Quiet || ctx_.level >= at)) *ctx_.log << prefix << m << '\n';
    }
    const CommandContext& ctx_;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
    if (!out.flush()) throw std::runtime_error("write to '" + path.string() + "' failed");
}

bool looks_like_json(const std::string& text) {
    const auto p = text.find_first_not_of(" \t\r\n");
    return p != std::string::npos && text[p] == '{';
}

// Config from a config file or a manifest, with the seed override applied.
ExperimentConfig load_config(const std::string& path, const CommandContext& ctx, std::string& source_text) {
    source_text = read_file(path);
    std::string config_text = source_text;
    if (looks_like_json(source_text)) {
        ManifestInput m = read_manifest(source_text);
        config_text = std::move(m.config_text);
        source_text = std::move(m.source_text);
    }
    ExperimentConfig cfg = parse_config(config_text);
    if (ctx.seed_override) {
        cfg.seed = *ctx.seed_override;
        cfg.sweep.master_seed = cfg.seed;
    }
    return cfg;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string grid_text(const RealVec& g) {
    std::string s;
    for (const double e : g) s += (s.empty() ? "" : ",") + format_double(e);
    return s;
}

// Runs a command body, mapping exceptions to exit codes.
template <typename F>
int guarded(const CommandContext& ctx, F&& body) {
    const Log log(ctx);
    try {
        return body();
    } catch (const ConfigError& e) {
        log.error(std::string("config: ") + e.what());
        return kExitBadInput;
    } catch (const CsvError& e) {
        log.error(e.what());
        return kExitBadInput;
    } catch (const IntegrityError& e) {
        log.error(std::string("integrity: ") + e.what());
        return kExitIntegrity;
    } catch (const std::invalid_argument& e) {
        log.error(e.what());
        return kExitBadInput;
    } catch (const std::exception& e) {
        log.error(e.what());
        return kExitFailure;
    }
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

}  // namespace

int cmd_sweep(const std::string& config_path, const CommandContext& ctx) {
    return guarded(ctx, [&] {
        const Log log(ctx);
        std::string source;
        const ExperimentConfig cfg = load_config(config_path, ctx, source);
        const fs::path dir(cfg.output_dir);
        fs::create_directories(dir);

        std::vector<ManifestOutput> outputs;
        for (const CsiMode mode : cfg.csi_modes) {
            const LinkConfig link = cfg.link(mode);
            DetectorFactory factory;
            if (cfg.run_dnn) {
                const auto& hp = *cfg.training;
                factory = hp.snr_policy == TrainingSnrPolicy::MatchedPerPoint
                              ? matched_training_factory(link, hp)
                              : mixed_training_factory(link, hp, cfg.sweep.esn0_grid_db, cfg.sweep.master_seed);
            }
            const auto t0 = std::chrono::steady_clock::now();
            log.info("sweep: " + std::string(to_string(mode)) + " CSI, " + std::to_string(cfg.sweep.esn0_grid_db.size()) +
                     " points");
            const SweepResult res = run_sweep(cfg.sweep, link, cfg.run_ml, factory, ctx.jobs);
            log.debug("sweep: " + std::string(to_string(mode)) + " CSI took " + format_double(seconds_since(t0)) + " s");

            for (const auto* curve : {res.ml ? &*res.ml : nullptr, res.dnn ? &*res.dnn : nullptr}) {
                if (curve == nullptr) continue;
                const std::string file =
                    lower(to_string(curve->detector)) + "_" + std::string(to_string(curve->csi)) + ".csv";
                write_file(dir / file, write_csv(*curve));
                outputs.push_back({file, *curve, res.stream_checksums, {}});
                log.info("wrote " + (dir / file).string());
            }
        }
        write_file(dir / "manifest.json", build_manifest(cfg, source, "sweep", outputs));
        log.info("wrote " + (dir / "manifest.json").string());
        return kExitOk;
    });
}

int cmd_plot(const std::vector<std::string>& csv_paths, const std::string& svg_path, const CommandContext& ctx) {
    return guarded(ctx, [&] {
        const Log log(ctx);
        if (csv_paths.empty()) {
            log.error("plot: no CSV files given");
            return kExitBadInput;
        }
        std::vector<SerCurve> curves;
        for (const auto& p : csv_paths) curves.push_back(parse_csv(read_file(p), p));
        std::vector<std::string> warnings;
        const std::string svg = render_svg(curves, warnings);
        for (const auto& w : warnings) log.warn(w);
        write_file(svg_path, svg);
        log.info("wrote " + svg_path);
        return kExitOk;
    });
}

int cmd_train(const std::string& config_path, const std::string& model_path, const CommandContext& ctx) {
    return guarded(ctx, [&] {
        const Log log(ctx);
        std::string source;
        const ExperimentConfig cfg = load_config(config_path, ctx, source);
        if (!cfg.training) throw ConfigError("training", "train: the config has no training section");
        if (cfg.csi_modes.size() != 1) throw ConfigError("csi.modes", "train: csi.modes must name exactly one mode");
        const auto& hp = *cfg.training;
        const auto& grid = cfg.sweep.esn0_grid_db;
        std::uint64_t seed = 0;
        if (hp.snr_policy == TrainingSnrPolicy::MatchedPerPoint) {
            if (grid.size() != 1) {
                throw ConfigError("sweep.esn0_db", "train: matched training needs exactly one sweep.esn0_db value "
                                                   "(or training.snr_policy = mixed)");
            }
            // Same detector a sweep would train at its first grid point.
            seed = training_seed(point_seed(cfg.sweep.master_seed, 0));
        } else {
            seed = training_seed(cfg.sweep.master_seed);
        }
        const auto t0 = std::chrono::steady_clock::now();
        const TrainedDetector d = train_detector(cfg.link(cfg.csi_modes.front()), hp, grid, seed);
        log.info("train: final loss " + format_double(d.meta.loss_history.back()) + " after " +
                 std::to_string(hp.iterations) + " iterations (" + format_double(seconds_since(t0)) + " s)");
        fs::path out = model_path.empty() ? fs::path(cfg.output_dir) : fs::path(model_path);
        if (model_path.empty() || fs::is_directory(out)) {
            fs::create_directories(out);
            out /= "dnn_" + d.meta.digest + ".fsomodel";
        }
        write_file(out, serialize_model(d));
        log.info("wrote " + out.string());
        return kExitOk;
    });
}

int cmd_detect(const std::string& model_path, const std::string& config_path, const CommandContext& ctx) {
    return guarded(ctx, [&] {
        const Log log(ctx);
        auto model = std::make_shared<const TrainedDetector>(deserialize_model(read_file(model_path)));
        std::string source;
        const ExperimentConfig cfg = load_config(config_path, ctx, source);
        if (model->constellation_order != cfg.order) {
            throw ConfigError("modulation.order", "detect: model was trained for M = " +
                                                      std::to_string(model->constellation_order) +
                                                      ", config asks for M = " + std::to_string(cfg.order));
        }
        const fs::path dir(cfg.output_dir);
        fs::create_directories(dir);

        std::vector<ManifestOutput> outputs;
        for (const CsiMode mode : cfg.csi_modes) {
            const LinkConfig link = cfg.link(mode);
            const TrainingHyperparams hp = cfg.training ? *cfg.training : model->meta.hyperparams;
            const std::string expected =
                training_digest(link, hp, model->meta.training_esn0_db, model->meta.seed);
            const bool mismatch = expected != model->meta.digest;
            if (mismatch) {
                const auto& ml = model->meta.link;
                log.warn("detect: model digest " + model->meta.digest + " does not match the " +
                         std::string(to_string(mode)) + " CSI configuration (" + expected + "); model trained at sigma=" +
                         format_double(ml.fading.sigma) + ", L=" + std::to_string(ml.fading.correlation_length) +
                         ", " + std::string(to_string(ml.csi.mode)) + " CSI");
            }
            std::vector<std::pair<std::string, std::string>> extra = {
                {"model_digest", model->meta.digest},
                {"config_digest", expected},
                {"digest_mismatch", mismatch ? "true" : "false"},
                {"model_training_esn0_db", grid_text(model->meta.training_esn0_db)},
            };
            const SweepResult res =
                run_sweep(cfg.sweep, link, cfg.run_ml, fixed_detector_factory(model), ctx.jobs);
            for (const auto* curve : {res.ml ? &*res.ml : nullptr, res.dnn ? &*res.dnn : nullptr}) {
                if (curve == nullptr) continue;
                const std::string file =
                    "detect_" + lower(to_string(curve->detector)) + "_" + std::string(to_string(curve->csi)) + ".csv";
                write_file(dir / file, write_csv(*curve, extra));
                outputs.push_back({file, *curve, res.stream_checksums, extra});
                log.info("wrote " + (dir / file).string());
            }
        }
        write_file(dir / "manifest.json", build_manifest(cfg, source, "detect", outputs));
        return kExitOk;
    });
}

}  // namespace fsolink
