#include <doctest.h>

#include <cmath>
#include <regex>

#include "fsolink/io.hpp"

using namespace fsolink;

namespace {

SerCurve sample_curve() {
    SerCurve c;
    c.digest = "0123456789abcdef";
    c.detector = DetectorKind::DNN;
    c.csi = CsiMode::Imperfect;
    c.sigma = 0.3;
    c.correlation_length = 2;
    c.points = {make_ser_point(0.0, 4321, 10000), make_ser_point(2.0 / 3.0, 17, 123457),
                make_ser_point(10.1, 1, 10'000'000), make_ser_point(30.0, 0, 10'000'000)};
    return c;
}

std::size_t count(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
    return n;
}

int csv_error_line(const std::string& text) {
    try {
        parse_csv(text, "f.csv");
    } catch (const CsvError& e) {
        CHECK(std::string(e.what()).rfind("f.csv:", 0) == 0);
        return e.line();
    }
    return -1;
}

TrainedDetector sample_detector() {
    LinkConfig link;
    link.fading = {0.3, 2};
    link.csi = CsiConfig::default_imperfect(0.3);
    TrainingHyperparams hp;
    hp.iterations = 30;
    hp.training_set_size = 800;
    return train_detector(link, hp, RealVec{12.0}, 99);
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("csv round trip is exact") {
    const SerCurve c = sample_curve();
    const std::string text = write_csv(c);
    CHECK(text.find("esn0_db,errors,trials,ser,ci_low,ci_high\n") != std::string::npos);
    CHECK(parse_csv(text) == c);
    const std::string with_extra = write_csv(c, {{"model_digest", "abc"}});
    CHECK(with_extra.find("# model_digest=abc\n") != std::string::npos);
    CHECK(parse_csv(with_extra) == c);
}

TEST_CASE("csv rows carry 17 significant digits") {
    const std::string text = write_csv(sample_curve());
    CHECK(text.find("0.66666666666666663,") != std::string::npos);
}

TEST_CASE("malformed csv names the line") {
    const std::string good = write_csv(sample_curve());
    const auto header_end = good.find("ci_high\n") + 8;
    const int header_line = static_cast<int>(count(good.substr(0, header_end), "\n"));
    CHECK(csv_error_line(good.substr(0, header_end) + "1,2,3\n") == header_line + 1);
    CHECK(csv_error_line(good.substr(0, header_end) + "1,2,1,2,0,1\n") == header_line + 1);
    CHECK(csv_error_line(good.substr(0, header_end) + "1,x,3,0,0,1\n") == header_line + 1);
    CHECK(csv_error_line("esn0_db,errors,trials,ser,ci_low,ci_high\n") > 0);
    std::string no_header = good;
    no_header.replace(no_header.find("esn0_db,errors"), 5, "esn1_");
    CHECK(csv_error_line(no_header) == header_line);
}

TEST_CASE("svg structure for one curve of two points") {
    SerCurve c = sample_curve();
    c.points = {make_ser_point(0.0, 100, 1000), make_ser_point(2.0, 10, 1000)};
    std::vector<std::string> warnings;
    const std::string svg = render_svg({c}, warnings);
    CHECK(warnings.empty());
    CHECK(count(svg, "<polyline") == 1);
    CHECK(count(svg, "<g class=\"whisker\"") == 2);
    CHECK(svg.find(c.label()) != std::string::npos);
    CHECK(svg.rfind("<svg", 0) == 0);
}

TEST_CASE("svg drops zero-ser points with a warning") {
    const SerCurve c = sample_curve();
    std::vector<std::string> warnings;
    const std::string svg = render_svg({c, c}, warnings);
    CHECK(warnings.size() == 2);
    CHECK(warnings[0].find("30") != std::string::npos);
    CHECK(count(svg, "<polyline") == 2);
    CHECK(count(svg, "<g class=\"whisker\"") == 6);
}

TEST_CASE("model container round trip is bit exact") {
    const TrainedDetector d = sample_detector();
    const std::string bytes = serialize_model(d);
    CHECK(bytes.rfind("FSOLNKMD", 0) == 0);
    const TrainedDetector back = deserialize_model(bytes);
    CHECK(back.params == d.params);
    CHECK(back.feature_mean == d.feature_mean);
    CHECK(back.feature_std == d.feature_std);
    CHECK(back.constellation_order == d.constellation_order);
    CHECK(back.meta.hyperparams == d.meta.hyperparams);
    CHECK(back.meta.link == d.meta.link);
    CHECK(back.meta.training_esn0_db == d.meta.training_esn0_db);
    CHECK(back.meta.seed == d.meta.seed);
    CHECK(back.meta.digest == d.meta.digest);
    CHECK(back.meta.loss_history == d.meta.loss_history);
    CHECK(serialize_model(back) == bytes);
}

TEST_CASE("corrupted or truncated models are rejected") {
    const std::string bytes = serialize_model(sample_detector());
    for (const std::size_t pos : {std::size_t{0}, std::size_t{9}, bytes.size() / 2, bytes.size() - 20, bytes.size() - 1}) {
        std::string bad = bytes;
        bad[pos] = static_cast<char>(bad[pos] ^ 0x5a);
        CHECK_THROWS_AS(deserialize_model(bad), IntegrityError);
    }
    CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 8)), IntegrityError);
    CHECK_THROWS_AS(deserialize_model(""), IntegrityError);
    CHECK_THROWS_AS(serialize_model(TrainedDetector{}), InvalidState);
}

TEST_CASE("manifest records the resolved config and reproduces it") {
    const std::string source = "modulation.order = 16\nfading.sigma = 0.3\nsweep.esn0_db = 0, 4\nseed = 5\n";
    const ExperimentConfig cfg = parse_config(source);
    const SerCurve c = sample_curve();
    const std::string m = build_manifest(cfg, source, "sweep", {{"ml_perfect.csv", c, {1, 2}, {}}});
    CHECK(m == build_manifest(cfg, source, "sweep", {{"ml_perfect.csv", c, {1, 2}, {}}}));
    CHECK(m.find("\"csi.sigma_e\": \"0.15\"") != std::string::npos);
    CHECK(m.find("\"library_version\"") != std::string::npos);
    CHECK(m.find("ml_perfect.csv") != std::string::npos);
    const ManifestInput in = read_manifest(m);
    CHECK(in.source_text == source);
    CHECK(parse_config(in.config_text) == cfg);
    CHECK_THROWS_AS(read_manifest("{not json"), ConfigError);
}

}
