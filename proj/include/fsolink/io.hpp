#pragma once

// On-disk formats: SER curves (CSV), plots (SVG), trained detectors (binary
// container) and run manifests (JSON).

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsolink/config.hpp"
#include "fsolink/montecarlo.hpp"

namespace fsolink {

// Malformed CSV; `line` is 1-based.
class CsvError : public std::runtime_error {
public:
    CsvError(const std::string& source, int line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] int line() const { return line_; }

private:
    int line_;
};

// Curve metadata as `# key=value` comment lines, the header
// esn0_db,errors,trials,ser,ci_low,ci_high, then one row per point with
// reals at 17 significant digits. `extra` lines follow the standard ones.
std::string write_csv(const SerCurve& curve, const std::vector<std::pair<std::string, std::string>>& extra = {});

// Unknown `# key=value` lines are ignored.
SerCurve parse_csv(const std::string& text, const std::string& source = "<csv>");

// Log10 SER against linear Es/N0, one polyline and legend entry per curve and
// one `<g class="whisker">` per plotted point. Points with SER = 0 cannot be
// placed on a log axis; they are dropped and reported in `warnings`.
std::string render_svg(const std::vector<SerCurve>& curves, std::vector<std::string>& warnings);

// Binary container: magic "FSOLNKMD", u32 format version, u64 header length,
// JSON header, u64 payload count, f64 payload (little-endian), u64 FNV-1a of
// everything before it. The payload holds the feature normalization, then
// weights and biases layer by layer (row-major), then the loss history.
std::string serialize_model(const TrainedDetector& d);

// Throws IntegrityError on any structural or checksum failure.
TrainedDetector deserialize_model(const std::string& bytes);

struct ManifestOutput {
    std::string file;
    SerCurve curve;
    std::vector<std::uint64_t> stream_checksums;
    std::vector<std::pair<std::string, std::string>> extra;
};

// Records the config as given, every resolved parameter, the library version
// and the produced files. Contains nothing that varies between identical runs.
std::string build_manifest(const ExperimentConfig& cfg, const std::string& source_text, const std::string& command,
                           const std::vector<ManifestOutput>& outputs);

struct ManifestInput {
    std::string config_text;  // resolved
    std::string source_text;  // as originally given
};

ManifestInput read_manifest(const std::string& manifest_json);

}  // namespace fsolink
