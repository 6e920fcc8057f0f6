#include "cli.hpp"

#include "crosscheck/cache.hpp"
#include "crosscheck/cost.hpp"
#include "crosscheck/detector.hpp"
#include "crosscheck/evaluation.hpp"
#include "crosscheck/http_client.hpp"
#include "crosscheck/jsonl.hpp"
#include "crosscheck/metrics.hpp"
#include "crosscheck/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef CROSSCHECK_VERSION
#define CROSSCHECK_VERSION "0.0.0"
#endif

namespace crosscheck::cli {

namespace {

using ojson = nlohmann::ordered_json;

class UsageError : public Error {
public:
    using Error::Error;
};

// Accepts JSON ({"section": {"flag": value}}) when the file starts with '{',
// otherwise TOML/INI through CLI11's own parser.
class JsonOrTomlConfig : public CLI::ConfigTOML {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::stringstream buf;
        buf << input.rdbuf();
        const std::string text = buf.str();
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || text[first] != '{') {
            std::istringstream again(text);
            return CLI::ConfigTOML::from_config(again);
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError(std::string("malformed JSON config: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        flatten(j, {}, items);
        return items;
    }

private:
    static std::string scalar(const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        return v.dump();
    }
    static void flatten(const nlohmann::json& j, const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& out) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it->is_object()) {
                auto p = parents;
                p.push_back(it.key());
                flatten(*it, p, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = it.key();
            if (it->is_array())
                for (const auto& v : *it) item.inputs.push_back(scalar(v));
            else
                item.inputs.push_back(scalar(*it));
            out.push_back(std::move(item));
        }
    }
};

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

struct Manifest {
    std::string command;
    ojson params = ojson::object();
    std::optional<std::uint64_t> seed;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

// Parameters and input contents determine the digest; paths and outputs do not.
void write_manifest(const Manifest& m, const std::string& path) {
    ojson digest_src;
    digest_src["command"] = m.command;
    digest_src["params"] = m.params;
    digest_src["inputs"] = ojson::array();
    for (const auto& p : m.inputs) digest_src["inputs"].push_back(file_digest(p));

    ojson j;
    j["command"] = m.command;
    j["config_digest"] = sha256_hex(digest_src.dump());
    j["seed"] = m.seed ? ojson(*m.seed) : ojson(nullptr);
    j["input_paths"] = m.inputs;
    j["output_paths"] = m.outputs;
    j["tool_version"] = CROSSCHECK_VERSION;
    j["parameters"] = m.params;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path);
    out << j.dump(2) << '\n';
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path);
    return out;
}

Metric make_metric(const std::string& name, double lambda, double theta, double eig_threshold) {
    Metric m;
    try {
        m.kind = parse_metric_kind(name);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    m.lambda = lambda;
    m.theta = theta;
    m.eig_threshold = eig_threshold;
    try {
        m.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    return m;
}

// Minimal line plot. Each series is drawn as a polyline in the unit square.
void write_svg(const std::string& path, const std::string& title, const std::string& x_label,
               const std::string& y_label,
               const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>&
                   series) {
    const double w = 480, h = 400, left = 60, top = 40, size = 300;
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
    auto esc = [](const std::string& s) {
        std::string o;
        for (char c : s) {
            if (c == '<') o += "&lt;";
            else if (c == '>') o += "&gt;";
            else if (c == '&') o += "&amp;";
            else o += c;
        }
        return o;
    };
    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << size << "\" height=\""
        << size << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << esc(title) << "</text>\n";
    out << "<text x=\"" << left + size / 2 << "\" y=\"" << top + size + 30
        << "\" font-size=\"12\" text-anchor=\"middle\">" << esc(x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << top + size / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 "
        << top + size / 2 << ")\" text-anchor=\"middle\">" << esc(y_label) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = colors[s % 5];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (const auto& [x, y] : series[s].second)
            out << fmt(left + std::clamp(x, 0.0, 1.0) * size) << ','
                << fmt(top + (1.0 - std::clamp(y, 0.0, 1.0)) * size) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << left + size + 10 << "\" y=\"" << top + 16 * (s + 1)
            << "\" font-size=\"11\" fill=\"" << color << "\">" << esc(series[s].first)
            << "</text>\n";
    }
    out << "</svg>\n";
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    synth::WorldConfig world;
    std::size_t m = 10;
    std::uint64_t draw = 0;
    std::string out;
};

void cmd_synth(const SynthArgs& a) {
    const auto world = synth::gen_world(a.world);
    const auto cases = synth::sample_cases(world, a.m, a.draw);
    store_cases(cases, a.out);

    Manifest man;
    man.command = "synth";
    man.seed = a.world.seed;
    const auto& w = a.world;
    man.params = {{"n", w.n_questions},
                  {"atoms", w.atoms},
                  {"concentration", w.concentration},
                  {"sigma", w.kernel_noise},
                  {"intra", w.intra_entail},
                  {"inter", w.inter_entail},
                  {"verifier_strength", w.verifier_strength},
                  {"verifier_concentration", w.verifier_concentration},
                  {"seed", w.seed},
                  {"m", a.m},
                  {"draw", a.draw}};
    man.outputs = {a.out};
    write_manifest(man, a.out + ".manifest.json");
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
    std::string in, out, metric = "mpd_self";
    double lambda = 0.5, theta = kDefaultBinarizeTheta, eig_threshold = kDefaultEigThreshold;
};

void cmd_score(const ScoreArgs& a) {
    const Metric metric = make_metric(a.metric, a.lambda, a.theta, a.eig_threshold);
    const auto cases = load_cases(a.in);
    auto out = open_out(a.out);
    out << "question_id,metric,value\n";
    for (const auto& c : cases) {
        const auto rec = score_case(c, metric);
        out << rec.question_id << ',' << rec.metric_name << ',' << fmt(rec.value) << '\n';
    }
    out.close();

    Manifest man;
    man.command = "score";
    man.params = {{"metric", metric.name()}};
    man.inputs = {a.in};
    man.outputs = {a.out};
    write_manifest(man, a.out + ".manifest.json");
}

// ---------------------------------------------------------------- detect

struct DetectArgs {
    std::string in, out, calibration;
    double t1 = 0.0, t2 = 0.5, p = 0.5;
};

void cmd_detect(const DetectArgs& a, std::ostream& err) {
    if (!(a.p >= 0.0 && a.p <= 1.0)) throw UsageError("--p must lie in [0,1]");
    const auto cases = load_cases(a.in);
    BatchOptions opts;
    if (!a.calibration.empty()) {
        for (const auto& c : load_cases(a.calibration))
            opts.calibration_scores.push_back(metric_value(c, opts.self_metric));
    }
    const auto result = batch_detect(cases, a.t1, a.t2, a.p, opts);

    auto out = open_out(a.out);
    std::size_t calls = 0;
    for (const auto& o : result.outcomes) {
        ojson j;
        j["id"] = o.question_id;
        j["predicted"] = o.predicted;
        j["verifier_called"] = o.verifier_called;
        j["s_self"] = o.s_self;
        if (o.s_cross) j["s_cross"] = *o.s_cross;
        out << j.dump() << '\n';
        calls += o.verifier_called ? 1 : 0;
    }
    out.close();
    err << "t_star=" << fmt(result.t_star) << " verifier_calls=" << calls << '/'
        << result.outcomes.size() << " realized_call_fraction=" << fmt(result.realized_call_fraction)
        << '\n';

    Manifest man;
    man.command = "detect";
    man.params = {{"t1", a.t1}, {"t2", a.t2}, {"p", a.p}, {"self_metric", opts.self_metric.name()},
                  {"cross_metric", opts.cross_metric.name()}};
    man.inputs = {a.in};
    if (!a.calibration.empty()) man.inputs.push_back(a.calibration);
    man.outputs = {a.out};
    write_manifest(man, a.out + ".manifest.json");
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string val, test, out_prefix, calibrate_on = "val";
    std::vector<double> p;
    std::size_t grid_t1 = kDefaultGridSize, grid_t2 = kDefaultGridSize;
    double bin_width = kDefaultBinWidth;
    bool svg = false;
};

std::vector<double> default_p_grid() {
    std::vector<double> out;
    for (int i = 0; i <= 20; ++i) out.push_back(i / 20.0);
    return out;
}

void cmd_evaluate(EvaluateArgs a, std::ostream& out_stream) {
    if (a.p.empty()) a.p = default_p_grid();
    for (double p : a.p)
        if (!(p >= 0.0 && p <= 1.0)) throw UsageError("every --p value must lie in [0,1]");
    if (a.grid_t1 < 2 || a.grid_t2 < 2) throw UsageError("grid sizes must be at least 2");
    if (!(a.bin_width > 0.0 && a.bin_width <= 1.0)) throw UsageError("--bin-width must lie in (0,1]");
    if (a.calibrate_on != "val" && a.calibrate_on != "test")
        throw UsageError("--calibrate-on must be 'val' or 'test'");

    const auto val_cases = load_cases(a.val);
    const auto test_cases = load_cases(a.test);
    const auto val_labels = case_labels(val_cases);
    const auto test_labels = case_labels(test_cases);
    const auto val = score_cases(val_cases);
    const auto test = score_cases(test_cases);
    std::vector<double> calib;
    for (const auto& s : (a.calibrate_on == "val" ? val : test)) calib.push_back(s.s_self);

    const auto g1 = linspace(0.0, 1.0, a.grid_t1);
    const auto g2 = linspace(0.0, 1.0, a.grid_t2);
    const auto fmt_p = [](double p) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", p);
        return std::string(buf);
    };

    std::vector<std::string> outputs;
    const std::string report_path = a.out_prefix + "_report.csv";
    const std::string gain_path = a.out_prefix + "_gain.csv";
    auto report = open_out(report_path);
    auto gain = open_out(gain_path);
    report << "p,val_frontier_area,test_auroc,frontier_size\n";
    gain << "p,auroc\n";
    outputs.push_back(report_path);
    outputs.push_back(gain_path);

    std::vector<std::pair<double, double>> gain_curve;
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> band_series;
    for (double p : a.p) {
        const auto points = band_points(val, val_labels, g1, g2, p, calib);
        const auto frontier = select_frontier(points, a.bin_width);
        const double val_area = frontier_area(frontier);

        std::vector<BandPoint> test_points;
        std::vector<std::pair<double, double>> xy;
        for (const auto& [bin, e] : frontier) {
            const auto r = batch_detect_scored(test, e.t1, e.t2, p, calib);
            const auto [fa, d] = roc_rates(r.outcomes, test_labels);
            test_points.push_back({fa, d, e.t1, e.t2});
            xy.emplace_back(fa, d);
        }
        const double test_auc = test_band_auc(test, test_labels, frontier, p, calib);

        const std::string band_path = a.out_prefix + "_band_p" + fmt_p(p) + ".csv";
        auto band = open_out(band_path);
        band << "x,y,t1,t2\n";
        for (const auto& b : test_points)
            band << fmt(b.p_fa) << ',' << fmt(b.p_d) << ',' << fmt(b.t1) << ',' << fmt(b.t2) << '\n';
        outputs.push_back(band_path);

        report << fmt(p) << ',' << fmt(val_area) << ',' << fmt(test_auc) << ',' << frontier.size()
               << '\n';
        gain << fmt(p) << ',' << fmt(test_auc) << '\n';
        gain_curve.emplace_back(p, test_auc);
        std::sort(xy.begin(), xy.end());
        band_series.emplace_back("p=" + fmt_p(p), xy);
    }
    report.close();
    gain.close();

    // Single-score baselines on the test set.
    ojson summary;
    summary["n_val"] = val_cases.size();
    summary["n_test"] = test_cases.size();
    ojson baselines = ojson::object();
    const Metric metrics[] = {Metric::mpd_self(), Metric::mpd_cross(), {MetricKind::SemanticEntropy},
                              {MetricKind::EigV}, {MetricKind::Ecc}, {MetricKind::Kle}};
    for (const auto& m : metrics) {
        std::vector<double> scores;
        try {
            for (const auto& c : test_cases) scores.push_back(metric_value(c, m));
        } catch (const MissingMatrix&) {
            continue;
        }
        try {
            baselines[m.name()] = {{"auroc", auroc(scores, test_labels)},
                                   {"aurac", aurac(scores, test_labels)}};
        } catch (const DegenerateLabels&) {
            baselines[m.name()] = {{"auroc", nullptr}, {"aurac", aurac(scores, test_labels)}};
        }
    }
    summary["baselines"] = baselines;
    std::uint64_t n_pos = 0;
    for (bool l : val_labels) n_pos += l ? 1 : 0;
    const std::uint64_t n_neg = val_labels.size() - n_pos;
    if (n_pos > 0 && n_neg > 0) {
        const auto b = hoeffding_epsilon(a.grid_t1, a.grid_t2, n_neg, n_pos);
        summary["bound"] = {{"epsilon", b.epsilon}, {"confidence", b.confidence},
                            {"n_neg", n_neg},       {"n_pos", n_pos}};
    }
    const std::string summary_path = a.out_prefix + "_summary.json";
    open_out(summary_path) << summary.dump(2) << '\n';
    outputs.push_back(summary_path);

    if (a.svg) {
        std::vector<std::pair<double, double>> pts = gain_curve;
        write_svg(a.out_prefix + "_gain.svg", "Test AUROC vs verifier budget", "p", "AUROC",
                  {{"two-stage", pts}});
        write_svg(a.out_prefix + "_band.svg", "Test ROC points of frontier combos", "p_FA", "p_D",
                  band_series);
        outputs.push_back(a.out_prefix + "_gain.svg");
        outputs.push_back(a.out_prefix + "_band.svg");
    }

    out_stream << "p,val_frontier_area,test_auroc\n";
    std::ifstream again(report_path);
    std::string line;
    std::getline(again, line);
    while (std::getline(again, line)) out_stream << line.substr(0, line.rfind(',')) << '\n';

    Manifest man;
    man.command = "evaluate";
    man.params = {{"p", a.p},
                  {"grid_t1", a.grid_t1},
                  {"grid_t2", a.grid_t2},
                  {"bin_width", a.bin_width},
                  {"calibrate_on", a.calibrate_on},
                  {"svg", a.svg}};
    man.inputs = {a.val, a.test};
    man.outputs = outputs;
    write_manifest(man, a.out_prefix + ".manifest.json");
}

// ---------------------------------------------------------------- cost

struct CostArgs {
    std::string curve, out, profiles, target = "Llama-2-13b-chat", verifier = "Llama-2-70b-chat-hf";
    std::vector<double> alpha{50, 90, 95, 100};
};

std::vector<cost::GainPoint> read_gain_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    std::vector<cost::GainPoint> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("p,", 0) == 0) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError(lineno, "expected 'p,auroc'");
        try {
            std::size_t used = 0;
            const double p = std::stod(line.substr(0, comma), &used);
            const double auc = std::stod(line.substr(comma + 1));
            out.push_back({p, auc});
        } catch (const std::logic_error&) {
            throw ParseError(lineno, "non-numeric gain curve row");
        }
    }
    return out;
}

void cmd_cost(const CostArgs& a, std::ostream& out_stream) {
    for (double al : a.alpha)
        if (!(al > 0.0 && al <= 100.0)) throw UsageError("--alpha values must lie in (0,100]");
    const auto profiles = a.profiles.empty() ? cost::builtin_profiles() : cost::load_profiles(a.profiles);
    const auto& target = cost::find_profile(profiles, a.target);
    const auto& verifier = cost::find_profile(profiles, a.verifier);
    const auto curve = read_gain_csv(a.curve);

    std::ostringstream table;
    table << "alpha,p_alpha,delta_max,relative_cost,no_gain\n";
    for (double al : a.alpha) {
        const auto g = cost::min_p_for_gain(curve, al);
        table << fmt(al) << ',' << fmt(g.p_alpha) << ',' << fmt(g.delta_max) << ','
              << fmt(cost::relative_additional_cost(g.p_alpha, target, verifier)) << ','
              << (g.no_gain ? "true" : "false") << '\n';
    }
    out_stream << table.str();
    if (!a.out.empty()) {
        open_out(a.out) << table.str();
        Manifest man;
        man.command = "cost";
        ojson prof;
        prof["target"] = {{"name", target.name}, {"n_params", target.n_params}};
        prof["verifier"] = {{"name", verifier.name}, {"n_params", verifier.n_params}};
        man.params = {{"alpha", a.alpha}, {"profiles", prof}};
        man.inputs = {a.curve};
        if (!a.profiles.empty()) man.inputs.push_back(a.profiles);
        man.outputs = {a.out};
        write_manifest(man, a.out + ".manifest.json");
    }
}

// ---------------------------------------------------------------- pipeline

struct EndpointArgs {
    std::string url, model, key_env;
};

struct PipelineArgs {
    std::string questions, out, cache_dir, prompt_template = "{question}";
    EndpointArgs target, verifier, entail;
    std::size_t m = 10, max_in_flight = 4, timeout_ms = 60000, retries = 2, backoff_ms = 500,
                batch_pairs = 64;
    double tau = 0.1, tau_prime = 1.0;
};

EndpointConfig endpoint(const EndpointArgs& e, const PipelineArgs& a) {
    EndpointConfig c;
    c.base_url = e.url;
    c.model_id = e.model;
    c.api_key_env = e.key_env;
    c.max_in_flight = a.max_in_flight;
    c.timeout_ms = a.timeout_ms;
    c.retries = a.retries;
    c.backoff_base_ms = a.backoff_ms;
    c.batch_pairs = a.batch_pairs;
    return c;
}

std::string render_prompt(const std::string& tmpl, const std::string& question) {
    std::string out = tmpl;
    const std::string key = "{question}";
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + question.size())) {
        out.replace(pos, key.size(), question);
    }
    return out;
}

void cmd_pipeline(const PipelineArgs& a) {
    if (a.m < 2) throw UsageError("--m must be at least 2");
    SamplingConfig sampling{a.tau, a.tau_prime, a.m};
    try {
        sampling.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    auto cases = load_cases(a.questions);
    const EndpointClient target(endpoint(a.target, a));
    const EndpointClient entail(endpoint(a.entail, a));
    std::optional<EndpointClient> verifier;
    if (!a.verifier.url.empty()) verifier.emplace(endpoint(a.verifier, a));
    std::optional<MatrixCache> cache;
    if (!a.cache_dir.empty()) cache.emplace(a.cache_dir);
    const MatrixCache* cache_ptr = cache ? &*cache : nullptr;

    for (auto& c : cases) {
        const std::string prompt = render_prompt(a.prompt_template, c.question);
        c.low_temp_answer = sample_answers(target, prompt, 1, a.tau).front();
        c.target_samples = sample_answers(target, prompt, a.m, a.tau_prime);
        c.p_self = entail_matrix(entail, *c.target_samples, std::nullopt, cache_ptr);
        if (verifier) {
            c.verifier_samples = sample_answers(*verifier, prompt, a.m, a.tau_prime);
            c.p_cross = entail_matrix(entail, *c.target_samples, c.verifier_samples, cache_ptr);
        } else {
            c.verifier_samples.reset();
            c.p_cross.reset();
        }
    }
    store_cases(cases, a.out);

    Manifest man;
    man.command = "pipeline";
    const auto ep = [](const EndpointArgs& e) { return ojson{{"url", e.url}, {"model", e.model}}; };
    man.params = {{"m", a.m},
                  {"tau", a.tau},
                  {"tau_prime", a.tau_prime},
                  {"prompt_template", a.prompt_template},
                  {"target", ep(a.target)},
                  {"verifier", a.verifier.url.empty() ? ojson(nullptr) : ep(a.verifier)},
                  {"entail", ep(a.entail)}};
    man.inputs = {a.questions};
    man.outputs = {a.out};
    write_manifest(man, a.out + ".manifest.json");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"crosscheck: hallucination detection from self- and cross-model consistency"};
    app.name("crosscheck");
    app.config_formatter(std::make_shared<JsonOrTomlConfig>());
    app.set_config("--config", "", "TOML or JSON file supplying any flag (flags win)");
    app.set_version_flag("--version", CROSSCHECK_VERSION);
    app.require_subcommand(1);

    SynthArgs sy;
    auto* s_synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
    s_synth->add_option("--n", sy.world.n_questions, "Number of questions")->capture_default_str();
    s_synth->add_option("--atoms", sy.world.atoms, "Semantic atoms per question")->capture_default_str();
    s_synth->add_option("--concentration", sy.world.concentration)->capture_default_str();
    s_synth->add_option("--sigma", sy.world.kernel_noise, "Entailment jitter half-width")
        ->capture_default_str();
    s_synth->add_option("--intra", sy.world.intra_entail)->capture_default_str();
    s_synth->add_option("--inter", sy.world.inter_entail)->capture_default_str();
    s_synth->add_option("--verifier-strength", sy.world.verifier_strength)->capture_default_str();
    s_synth->add_option("--verifier-concentration", sy.world.verifier_concentration)
        ->capture_default_str();
    s_synth->add_option("--seed", sy.world.seed)->capture_default_str();
    s_synth->add_option("--m", sy.m, "Samples per question")->capture_default_str();
    s_synth->add_option("--draw", sy.draw, "Resample index")->capture_default_str();
    s_synth->add_option("--out", sy.out)->required();

    ScoreArgs sc;
    auto* s_score = app.add_subcommand("score", "Score cases with a consistency metric");
    s_score->add_option("--in", sc.in)->required();
    s_score->add_option("--metric", sc.metric, "mpd_self|mpd_cross|se|eigv|ecc|kle|combined")
        ->capture_default_str();
    s_score->add_option("--lambda", sc.lambda, "Cross weight for combined")->capture_default_str();
    s_score->add_option("--theta", sc.theta, "Binarization threshold for se")->capture_default_str();
    s_score->add_option("--eig-threshold", sc.eig_threshold)->capture_default_str();
    s_score->add_option("--out", sc.out)->required();

    DetectArgs de;
    auto* s_detect = app.add_subcommand("detect", "Budget-aware two-stage detection");
    s_detect->add_option("--in", de.in)->required();
    s_detect->add_option("--t1", de.t1)->capture_default_str();
    s_detect->add_option("--t2", de.t2)->capture_default_str();
    s_detect->add_option("--p", de.p, "Verifier budget fraction")->capture_default_str();
    s_detect->add_option("--calibration", de.calibration, "Cases whose self scores place t_star");
    s_detect->add_option("--out", de.out)->required();

    EvaluateArgs ev;
    auto* s_eval = app.add_subcommand("evaluate", "Band protocol evaluation");
    s_eval->add_option("--val", ev.val)->required();
    s_eval->add_option("--test", ev.test)->required();
    s_eval->add_option("--p", ev.p, "Budget fractions (default 0, 0.05, ..., 1)");
    s_eval->add_option("--grid-t1", ev.grid_t1)->capture_default_str();
    s_eval->add_option("--grid-t2", ev.grid_t2)->capture_default_str();
    s_eval->add_option("--bin-width", ev.bin_width)->capture_default_str();
    s_eval->add_option("--calibrate-on", ev.calibrate_on, "val|test")->capture_default_str();
    s_eval->add_flag("--svg", ev.svg, "Also write SVG plots");
    s_eval->add_option("--out-prefix", ev.out_prefix)->required();

    CostArgs co;
    auto* s_cost = app.add_subcommand("cost", "Budget needed for a share of the AUROC gain");
    s_cost->add_option("--curve", co.curve, "CSV with columns p,auroc")->required();
    s_cost->add_option("--alpha", co.alpha, "Percent of the maximal gain")->capture_default_str();
    s_cost->add_option("--profiles", co.profiles, "JSON model profiles (default: built-in)");
    s_cost->add_option("--target", co.target)->capture_default_str();
    s_cost->add_option("--verifier", co.verifier)->capture_default_str();
    s_cost->add_option("--out", co.out);

    PipelineArgs pi;
    auto* s_pipe = app.add_subcommand("pipeline", "Sample answers and build entailment matrices");
    s_pipe->add_option("--questions", pi.questions, "JSONL with id and question")->required();
    s_pipe->add_option("--target-url", pi.target.url)->required();
    s_pipe->add_option("--target-model", pi.target.model);
    s_pipe->add_option("--target-key-env", pi.target.key_env);
    s_pipe->add_option("--verifier-url", pi.verifier.url);
    s_pipe->add_option("--verifier-model", pi.verifier.model);
    s_pipe->add_option("--verifier-key-env", pi.verifier.key_env);
    s_pipe->add_option("--entail-url", pi.entail.url)->required();
    s_pipe->add_option("--entail-model", pi.entail.model);
    s_pipe->add_option("--entail-key-env", pi.entail.key_env);
    s_pipe->add_option("--m", pi.m)->capture_default_str();
    s_pipe->add_option("--tau", pi.tau)->capture_default_str();
    s_pipe->add_option("--tau-prime", pi.tau_prime)->capture_default_str();
    s_pipe->add_option("--prompt-template", pi.prompt_template)->capture_default_str();
    s_pipe->add_option("--cache-dir", pi.cache_dir);
    s_pipe->add_option("--max-in-flight", pi.max_in_flight)->capture_default_str();
    s_pipe->add_option("--timeout-ms", pi.timeout_ms)->capture_default_str();
    s_pipe->add_option("--retries", pi.retries)->capture_default_str();
    s_pipe->add_option("--backoff-ms", pi.backoff_ms)->capture_default_str();
    s_pipe->add_option("--batch-pairs", pi.batch_pairs)->capture_default_str();
    s_pipe->add_option("--out", pi.out)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (s_synth->parsed()) cmd_synth(sy);
        else if (s_score->parsed()) cmd_score(sc);
        else if (s_detect->parsed()) cmd_detect(de, err);
        else if (s_eval->parsed()) cmd_evaluate(ev, out);
        else if (s_cost->parsed()) cmd_cost(co, out);
        else if (s_pipe->parsed()) cmd_pipeline(pi);
        return kExitOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const TransportError& e) {
        err << "transport error: " << e.what() << '\n';
        return kExitTransport;
    } catch (const MalformedResponse& e) {
        err << "transport error: " << e.what() << '\n';
        return kExitTransport;
    } catch (const Error& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

}  // namespace crosscheck::cli
