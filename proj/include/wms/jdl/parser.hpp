#pragma once

#include "wms/jdl/ad.hpp"
#include "wms/jdl/expr.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wms::jdl {

/// Parse failure. `line` and `column` are 1-based and point at the offending
/// token (or one past the last character at end of input).
class SyntaxError : public std::runtime_error {
public:
    SyntaxError(int line, int column, std::vector<std::string> expected, std::string found);

    int line() const { return line_; }
    int column() const { return column_; }
    const std::vector<std::string>& expected() const { return expected_; }
    const std::string& found() const { return found_; }
    bool at_end_of_input() const { return found_ == "end of input"; }

private:
    int line_;
    int column_;
    std::vector<std::string> expected_;
    std::string found_;
};

Expr parse_expr(std::string_view text);

/// Parses `[ name = expr; ... ]`. The trailing `;` before `]` is optional.
Ad parse_ad(std::string_view text, AdRole role = AdRole::Job);

/// Several ads back to back (a snapshot body).
std::vector<Ad> parse_ads(std::string_view text, AdRole role);

/// Ad if the first token is `[`, otherwise an expression.
std::variant<Expr, Ad> parse(std::string_view text, AdRole role = AdRole::Job);

} // namespace wms::jdl
