#pragma once

// Line-delimited JSON persistence for QuestionCase records.
//
//   {"id", "question", "low_temp_answer"?, "target_samples"?, "verifier_samples"?,
//    "p_self"?, "p_cross"?, "label"?}
//
// Unknown top-level fields survive a load/store round trip. Doubles are
// written in shortest round-trip form, so matrices come back bit-exact.

#include "crosscheck/core.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace crosscheck {

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class MissingField : public ParseError {
public:
    MissingField(std::size_t line, const std::string& field)
        : ParseError(line, "missing required field '" + field + "'"), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// One record; `line` is only used in error messages.
QuestionCase parse_case(const std::string& text, std::size_t line = 1);
std::string case_to_json(const QuestionCase& c);

std::vector<QuestionCase> read_cases(std::istream& in);
void write_cases(std::span<const QuestionCase> cases, std::ostream& out);

/// Blank lines are skipped but still counted for error line numbers.
std::vector<QuestionCase> load_cases(const std::string& path);
void store_cases(std::span<const QuestionCase> cases, const std::string& path);

}  // namespace crosscheck
