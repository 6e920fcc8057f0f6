#include <doctest.h>

#include "cli.hpp"
#include "crosscheck/cost.hpp"
#include "crosscheck/jsonl.hpp"
#include "crosscheck/metrics.hpp"
#include "crosscheck/synth.hpp"
#include "mock_servers.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace crosscheck;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = crosscheck::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path workdir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("crosscheck_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::string synth_file(const fs::path& dir, const std::string& name, int n, int seed, int m = 6) {
    const auto path = (dir / name).string();
    const auto r = invoke({"synth", "--n", std::to_string(n), "--seed", std::to_string(seed), "--m",
                        std::to_string(m), "--out", path});
    REQUIRE(r.code == 0);
    return path;
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(invoke({}).code == crosscheck::cli::kExitUsage);
    CHECK(invoke({"frobnicate"}).code == crosscheck::cli::kExitUsage);
    CHECK(invoke({"synth"}).code == crosscheck::cli::kExitUsage);  // --out is required
    CHECK(invoke({"--help"}).code == crosscheck::cli::kExitOk);
    const auto v = invoke({"--version"});
    CHECK(v.code == crosscheck::cli::kExitOk);
    CHECK_FALSE(v.out.empty());
}

TEST_CASE("synth is byte reproducible") {
    const auto dir = workdir("synth");
    const auto a = synth_file(dir, "a.jsonl", 40, 3);
    const auto b = synth_file(dir, "b.jsonl", 40, 3);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(synth_file(dir, "c.jsonl", 40, 4)));
    CHECK(load_cases(a).size() == 40);

    // Same content as the library produces.
    synth::WorldConfig cfg;
    cfg.n_questions = 40;
    cfg.seed = 3;
    const auto lib = synth::sample_cases(synth::gen_world(cfg), 6);
    const auto got = load_cases(a);
    for (std::size_t i = 0; i < lib.size(); ++i) CHECK(got[i] == lib[i]);

    const auto one = (dir / "one.jsonl").string();
    REQUIRE(invoke({"synth", "--n", "30", "--atoms", "1", "--out", one}).code == 0);
    for (const auto& c : load_cases(one)) CHECK_FALSE(*c.label);

    CHECK(invoke({"synth", "--sigma", "0.3", "--out", one}).code == crosscheck::cli::kExitData);
}

TEST_CASE("manifest") {
    const auto dir = workdir("manifest");
    const auto a = synth_file(dir, "a.jsonl", 10, 1);
    const auto b = synth_file(dir, "b.jsonl", 10, 1);
    const auto ma = nlohmann::json::parse(slurp(a + ".manifest.json"));
    const auto mb = nlohmann::json::parse(slurp(b + ".manifest.json"));
    CHECK(ma["command"] == "synth");
    CHECK(ma["seed"] == 1);
    CHECK(ma["config_digest"].get<std::string>().size() == 64);
    CHECK(ma["config_digest"] == mb["config_digest"]);
    CHECK(ma.contains("tool_version"));
    CHECK(ma["parameters"]["n"] == 10);

    const auto c = synth_file(dir, "c.jsonl", 11, 1);
    CHECK(nlohmann::json::parse(slurp(c + ".manifest.json"))["config_digest"] != ma["config_digest"]);

    // Scoring two identical inputs gives identical digests.
    REQUIRE(invoke({"score", "--in", a, "--out", (dir / "sa.csv").string()}).code == 0);
    REQUIRE(invoke({"score", "--in", b, "--out", (dir / "sb.csv").string()}).code == 0);
    CHECK(nlohmann::json::parse(slurp(dir / "sa.csv.manifest.json"))["config_digest"] ==
          nlohmann::json::parse(slurp(dir / "sb.csv.manifest.json"))["config_digest"]);
    CHECK(slurp(dir / "sa.csv") == slurp(dir / "sb.csv"));
}

TEST_CASE("score") {
    const auto dir = workdir("score");
    const auto ones = (dir / "ones.jsonl").string();
    std::ofstream(ones) << R"({"id":"a","question":"q","p_self":[[1,1,1],[1,1,1],[1,1,1]],"p_cross":[[1,1,1],[1,1,1],[1,1,1]]})"
                        << "\n";
    // One semantic cluster: no spread, and EigV counts exactly one cluster.
    for (const std::string metric : {"mpd_self", "mpd_cross", "se", "eigv", "kle", "combined"}) {
        const auto out = (dir / (metric + ".csv")).string();
        REQUIRE(invoke({"score", "--in", ones, "--metric", metric, "--out", out}).code == 0);
        const auto rows = read_csv(out);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0] == std::vector<std::string>{"question_id", "metric", "value"});
        CHECK(rows[1][0] == "a");
        CHECK(std::stod(rows[1][2]) == doctest::Approx(metric == "eigv" ? 1.0 : 0.0).epsilon(1e-12));
    }

    const auto cases_path = synth_file(dir, "s.jsonl", 20, 7);
    const auto out = (dir / "comb.csv").string();
    REQUIRE(invoke({"score", "--in", cases_path, "--metric", "combined", "--lambda", "0.3", "--out", out}).code == 0);
    const auto rows = read_csv(out);
    const auto cases = load_cases(cases_path);
    REQUIRE(rows.size() == cases.size() + 1);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        CHECK(rows[i + 1][0] == cases[i].id);
        CHECK(std::stod(rows[i + 1][2]) == combined_score(*cases[i].p_self, *cases[i].p_cross, 0.3));
    }

    CHECK(invoke({"score", "--in", cases_path, "--metric", "vibes", "--out", out}).code == crosscheck::cli::kExitUsage);
    CHECK(invoke({"score", "--in", cases_path, "--metric", "combined", "--lambda", "2", "--out", out}).code ==
          crosscheck::cli::kExitUsage);
    CHECK(invoke({"score", "--in", (dir / "nope.jsonl").string(), "--out", out}).code == crosscheck::cli::kExitData);
}

TEST_CASE("detect") {
    const auto dir = workdir("detect");
    const auto cases_path = synth_file(dir, "s.jsonl", 50, 2);
    const auto out = (dir / "d.jsonl").string();

    auto r = invoke({"detect", "--in", cases_path, "--t1", "0", "--t2", "0.4", "--p", "0", "--out", out});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("verifier_calls=0/50") != std::string::npos);
    std::ifstream in(out);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j["verifier_called"] == false);
        CHECK_FALSE(j.contains("s_cross"));
        ++n;
    }
    CHECK(n == 50);

    r = invoke({"detect", "--in", cases_path, "--t1", "0", "--t2", "0.4", "--p", "0.4", "--out", out});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("verifier_calls=20/50") != std::string::npos);

    // Calibrating on another file still produces a valid run.
    const auto calib = synth_file(dir, "c.jsonl", 30, 9);
    r = invoke({"detect", "--in", cases_path, "--calibration", calib, "--p", "0.5", "--out", out});
    CHECK(r.code == 0);
    CHECK(r.err.find("t_star=") != std::string::npos);

    const auto missing = (dir / "missing.jsonl").string();
    std::ofstream(missing) << R"({"id":"alpha","question":"q","p_self":[[1,0],[0,1]],"p_cross":[[1,0],[0,1]]})" << "\n"
                           << R"({"id":"beta","question":"q","p_self":[[1,0.2],[0.1,1]]})" << "\n";
    r = invoke({"detect", "--in", missing, "--t1", "0", "--p", "1", "--out", out});
    CHECK(r.code == crosscheck::cli::kExitData);
    CHECK(r.err.find("beta") != std::string::npos);

    CHECK(invoke({"detect", "--in", cases_path, "--p", "1.5", "--out", out}).code == crosscheck::cli::kExitUsage);
}

TEST_CASE("evaluate") {
    const auto dir = workdir("evaluate");
    const auto val = synth_file(dir, "val.jsonl", 60, 5);
    const auto prefix = (dir / "run").string();
    const auto r = invoke({"evaluate", "--val", val, "--test", val, "--p", "0", "--p", "0.5", "--p", "1",
                        "--grid-t1", "11", "--grid-t2", "11", "--bin-width", "0.1", "--svg", "--out-prefix",
                        prefix});
    REQUIRE(r.code == 0);
    const auto report = read_csv(prefix + "_report.csv");
    REQUIRE(report.size() == 4);
    CHECK(report[0] == std::vector<std::string>{"p", "val_frontier_area", "test_auroc", "frontier_size"});
    for (std::size_t i = 1; i < report.size(); ++i) {
        // Test set equals validation set, so both areas agree.
        CHECK(std::stod(report[i][1]) == doctest::Approx(std::stod(report[i][2])).epsilon(1e-12));
        CHECK(std::stoul(report[i][3]) >= 1);
    }
    CHECK(read_csv(prefix + "_gain.csv").size() == 4);
    for (const char* p : {"0", "0.5", "1"}) CHECK(fs::exists(prefix + "_band_p" + p + ".csv"));
    CHECK(fs::exists(prefix + "_gain.svg"));
    CHECK(fs::exists(prefix + "_band.svg"));
    CHECK(fs::exists(prefix + ".manifest.json"));
    const auto summary = nlohmann::json::parse(slurp(prefix + "_summary.json"));
    CHECK(summary["n_val"] == 60);
    CHECK(summary["baselines"].contains("mpd_self"));
    CHECK(summary["bound"]["epsilon"].get<double>() > 0.0);
    CHECK(r.out.rfind("p,val_frontier_area,test_auroc\n", 0) == 0);

    const auto unlabeled = (dir / "unlabeled.jsonl").string();
    std::ofstream(unlabeled) << R"({"id":"nolabel-7","question":"q","p_self":[[1,0],[0,1]],"p_cross":[[1,0],[0,1]]})"
                             << "\n";
    const auto bad = invoke({"evaluate", "--val", val, "--test", unlabeled, "--p", "0.5", "--out-prefix", prefix});
    CHECK(bad.code == crosscheck::cli::kExitData);
    CHECK(bad.err.find("nolabel-7") != std::string::npos);
    CHECK(invoke({"evaluate", "--val", val, "--test", val, "--calibrate-on", "train", "--out-prefix", prefix}).code ==
          crosscheck::cli::kExitUsage);
}

TEST_CASE("cost") {
    const auto dir = workdir("cost");
    const auto curve = (dir / "gain.csv").string();
    {
        std::ofstream c(curve);
        c << "p,auroc\n";
        for (int i = 0; i <= 10; ++i) c << i / 10.0 << ',' << 0.6 + 0.02 * i << "\n";
    }
    const auto out = (dir / "cost.csv").string();
    const auto r = invoke({"cost", "--curve", curve, "--alpha", "50", "--out", out});
    REQUIRE(r.code == 0);
    const auto rows = read_csv(out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"alpha", "p_alpha", "delta_max", "relative_cost", "no_gain"});
    CHECK(std::stod(rows[1][1]) == 0.5);
    CHECK(std::stod(rows[1][3]) == doctest::Approx(0.5 * 70.0 / 13.0).epsilon(1e-12));
    CHECK(rows[1][4] == "false");
    CHECK(r.out == slurp(out));

    const auto no_zero = (dir / "nozero.csv").string();
    std::ofstream(no_zero) << "p,auroc\n0.5,0.7\n1,0.8\n";
    CHECK(invoke({"cost", "--curve", no_zero}).code == crosscheck::cli::kExitData);
    CHECK(invoke({"cost", "--curve", curve, "--verifier", "nobody"}).code == crosscheck::cli::kExitData);
    CHECK(invoke({"cost", "--curve", curve, "--alpha", "0"}).code == crosscheck::cli::kExitUsage);

    const auto profiles = (dir / "profiles.json").string();
    std::ofstream(profiles) << R"([{"name":"small","n_params":1e9,"context_length":2048},{"name":"large","n_params":4e9,"context_length":2048}])";
    const auto custom = invoke({"cost", "--curve", curve, "--alpha", "100", "--profiles", profiles, "--target", "small",
                             "--verifier", "large"});
    REQUIRE(custom.code == 0);
    CHECK(custom.out.find("\n100,1,") != std::string::npos);
    CHECK(custom.out.find(",4,false") != std::string::npos);
}

TEST_CASE("config files: flags beat config, config beats defaults") {
    const auto dir = workdir("config");
    const auto json_cfg = (dir / "cfg.json").string();
    std::ofstream(json_cfg) << R"({"synth": {"n": 7, "m": 4, "seed": 11}})";
    const auto toml_cfg = (dir / "cfg.toml").string();
    std::ofstream(toml_cfg) << "[synth]\nn = 7\nm = 4\nseed = 11\n";

    for (const auto& cfg : {json_cfg, toml_cfg}) {
        const auto out = (dir / "out.jsonl").string();
        REQUIRE(invoke({"--config", cfg, "synth", "--m", "3", "--out", out}).code == 0);
        const auto cases = load_cases(out);
        CHECK(cases.size() == 7);                  // from the config
        CHECK(cases.front().p_self->size() == 3);  // flag wins
        synth::WorldConfig w;                      // everything else at defaults
        w.n_questions = 7;
        w.seed = 11;
        const auto lib = synth::sample_cases(synth::gen_world(w), 3);
        for (std::size_t i = 0; i < lib.size(); ++i) CHECK(cases[i] == lib[i]);
    }
    const auto broken = (dir / "broken.json").string();
    std::ofstream(broken) << "{\"synth\": ";
    CHECK(invoke({"--config", broken, "synth", "--out", (dir / "x.jsonl").string()}).code == crosscheck::cli::kExitUsage);
}

TEST_CASE("pipeline against mock endpoints") {
    mock::Server target, verifier, entail;
    target.start();
    verifier.start();
    entail.start();
    const auto dir = workdir("pipeline");
    const auto questions = (dir / "q.jsonl").string();
    std::ofstream(questions) << R"({"id":"a","question":"Capital of France?","label":false})" << "\n"
                             << R"({"id":"b","question":"Largest planet?"})" << "\n";
    const auto out = (dir / "out.jsonl").string();

    auto r = invoke({"pipeline", "--questions", questions, "--target-url", target.url(), "--verifier-url",
                  verifier.url(), "--entail-url", entail.url(), "--prompt-template", "Q: {question}",
                  "--cache-dir", (dir / "cache").string(), "--backoff-ms", "1", "--out", out});
    REQUIRE(r.code == 0);
    auto cases = load_cases(out);
    REQUIRE(cases.size() == 2);
    CHECK(cases[0].label == std::optional<bool>(false));
    for (const auto& c : cases) {
        CHECK(c.low_temp_answer == "greedy:Q: " + c.question);
        REQUIRE(c.target_samples);
        REQUIRE(c.verifier_samples);
        CHECK(c.target_samples->size() == 10);
        CHECK(c.verifier_samples->size() == 10);
        for (std::size_t j = 0; j < 10; ++j)
            for (std::size_t k = 0; k < 10; ++k) {
                const auto& t = *c.target_samples;
                const auto& v = *c.verifier_samples;
                CHECK((*c.p_self)(j, k) == (j == k ? 1.0 : mock::pair_score(t[j], t[k])));
                CHECK((*c.p_cross)(j, k) == mock::pair_score(t[j], v[k]));
            }
        // Scoring the pipeline output works end to end.
        CHECK(metric_value(c, Metric::mpd_self()) >= 0.0);
    }
    CHECK(fs::exists(out + ".manifest.json"));

    // Without a verifier, the cross fields are left out.
    r = invoke({"pipeline", "--questions", questions, "--target-url", target.url(), "--entail-url", entail.url(),
             "--m", "4", "--out", out});
    REQUIRE(r.code == 0);
    cases = load_cases(out);
    for (const auto& c : cases) {
        CHECK(c.p_self->size() == 4);
        CHECK_FALSE(c.verifier_samples.has_value());
        CHECK_FALSE(c.p_cross.has_value());
    }
    const auto line = slurp(out);
    CHECK(line.find("p_cross") == std::string::npos);

    CHECK(invoke({"pipeline", "--questions", questions, "--target-url", target.url(), "--entail-url", entail.url(),
               "--m", "1", "--out", out})
              .code == crosscheck::cli::kExitUsage);
}

TEST_CASE("pipeline transport failure") {
    mock::Server target, entail;
    entail.fail_first = 1000;
    target.start();
    entail.start();
    const auto dir = workdir("pipeline_fail");
    const auto questions = (dir / "q.jsonl").string();
    std::ofstream(questions) << R"({"id":"a","question":"?"})" << "\n";
    const auto r = invoke({"pipeline", "--questions", questions, "--target-url", target.url(), "--entail-url",
                        entail.url(), "--backoff-ms", "1", "--retries", "1", "--out", (dir / "o.jsonl").string()});
    CHECK(r.code == crosscheck::cli::kExitTransport);
    CHECK(entail.requests() >= 2);
}
