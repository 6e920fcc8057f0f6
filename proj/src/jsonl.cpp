#include "crosscheck/jsonl.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>

namespace crosscheck {

namespace {

using json = nlohmann::ordered_json;

const char* const kKnownFields[] = {"id",      "question", "low_temp_answer", "target_samples",
                                    "verifier_samples", "p_self", "p_cross", "label"};

bool is_known(const std::string& key) {
    for (const char* k : kKnownFields)
        if (key == k) return true;
    return false;
}

std::string get_string(const json& j, const char* field, std::size_t line) {
    const auto it = j.find(field);
    if (it == j.end()) throw MissingField(line, field);
    if (!it->is_string()) throw ParseError(line, std::string("field '") + field + "' must be a string");
    return it->get<std::string>();
}

std::vector<std::string> get_texts(const json& j, const char* field, std::size_t line) {
    const json& v = j.at(field);
    if (!v.is_array()) throw ParseError(line, std::string("field '") + field + "' must be an array");
    std::vector<std::string> out;
    for (const auto& item : v) {
        if (!item.is_string())
            throw ParseError(line, std::string("field '") + field + "' must hold strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

EntailmentMatrix get_matrix(const json& j, const char* field, MatrixKind kind, std::size_t line) {
    const json& v = j.at(field);
    if (!v.is_array()) throw ParseError(line, std::string("field '") + field + "' must be a matrix");
    std::vector<std::vector<double>> rows;
    for (const auto& row : v) {
        if (!row.is_array())
            throw ParseError(line, std::string("field '") + field + "' must be a matrix");
        auto& r = rows.emplace_back();
        for (const auto& x : row) {
            if (!x.is_number())
                throw ParseError(line, std::string("field '") + field + "' holds a non-number");
            r.push_back(x.get<double>());
        }
    }
    try {
        return validate_matrix(rows, kind);
    } catch (const Error& e) {
        throw ParseError(line, std::string(field) + ": " + e.what());
    }
}

json matrix_json(const EntailmentMatrix& m) {
    json rows = json::array();
    for (const auto& r : m.to_rows()) rows.push_back(r);
    return rows;
}

}  // namespace

QuestionCase parse_case(const std::string& text, std::size_t line) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line, "record must be a JSON object");

    QuestionCase c;
    c.id = get_string(j, "id", line);
    c.question = get_string(j, "question", line);
    if (j.contains("low_temp_answer")) c.low_temp_answer = get_string(j, "low_temp_answer", line);
    if (j.contains("target_samples")) c.target_samples = get_texts(j, "target_samples", line);
    if (j.contains("verifier_samples")) c.verifier_samples = get_texts(j, "verifier_samples", line);
    if (j.contains("p_self")) c.p_self = get_matrix(j, "p_self", MatrixKind::SelfTarget, line);
    if (j.contains("p_cross"))
        c.p_cross = get_matrix(j, "p_cross", MatrixKind::CrossTargetVerifier, line);
    if (j.contains("label")) {
        if (!j["label"].is_boolean()) throw ParseError(line, "field 'label' must be a boolean");
        c.label = j["label"].get<bool>();
    }
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!is_known(it.key())) c.extra[it.key()] = it.value().dump();

    try {
        c.validate();
    } catch (const Error& e) {
        throw ParseError(line, e.what());
    }
    return c;
}

std::string case_to_json(const QuestionCase& c) {
    json j;
    j["id"] = c.id;
    j["question"] = c.question;
    if (c.low_temp_answer) j["low_temp_answer"] = *c.low_temp_answer;
    if (c.target_samples) j["target_samples"] = *c.target_samples;
    if (c.verifier_samples) j["verifier_samples"] = *c.verifier_samples;
    if (c.p_self) j["p_self"] = matrix_json(*c.p_self);
    if (c.p_cross) j["p_cross"] = matrix_json(*c.p_cross);
    if (c.label) j["label"] = *c.label;
    for (const auto& [key, text] : c.extra) {
        if (is_known(key)) throw InvalidArgument("extra field '" + key + "' shadows a known field");
        j[key] = json::parse(text);
    }
    return j.dump();
}

std::vector<QuestionCase> read_cases(std::istream& in) {
    std::vector<QuestionCase> out;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_case(text, line));
    }
    return out;
}

void write_cases(std::span<const QuestionCase> cases, std::ostream& out) {
    for (const auto& c : cases) out << case_to_json(c) << '\n';
}

std::vector<QuestionCase> load_cases(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    return read_cases(in);
}

void store_cases(std::span<const QuestionCase> cases, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path);
    write_cases(cases, out);
    out.flush();
    if (!out) throw InvalidArgument("write failed for " + path);
}

}  // namespace crosscheck
