#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace wms::jdl {

struct Undefined {
    bool operator==(const Undefined&) const = default;
};

struct Error {
    bool operator==(const Error&) const = default;
};

/// Result of evaluating an expression. Errors are values, not exceptions.
class Value {
public:
    using List = std::vector<Value>;
    using Storage = std::variant<Undefined, Error, bool, std::int64_t, double, std::string, List>;

    Value() = default;
    Value(Undefined u) : v_(u) {}
    Value(Error e) : v_(e) {}
    Value(bool b) : v_(b) {}
    Value(std::int64_t i) : v_(i) {}
    Value(int i) : v_(std::int64_t{i}) {}
    Value(double d) : v_(d) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(const char* s) : v_(std::string(s)) {}
    Value(List l) : v_(std::move(l)) {}

    static Value undefined() { return Value{Undefined{}}; }
    static Value error() { return Value{Error{}}; }

    bool is_undefined() const { return std::holds_alternative<Undefined>(v_); }
    bool is_error() const { return std::holds_alternative<Error>(v_); }
    bool is_bool() const { return std::holds_alternative<bool>(v_); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
    bool is_real() const { return std::holds_alternative<double>(v_); }
    bool is_number() const { return is_int() || is_real(); }
    bool is_string() const { return std::holds_alternative<std::string>(v_); }
    bool is_list() const { return std::holds_alternative<List>(v_); }

    bool as_bool() const { return std::get<bool>(v_); }
    std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
    double as_real() const { return std::get<double>(v_); }
    /// Int or real promoted to double.
    double as_number() const { return is_int() ? static_cast<double>(as_int()) : as_real(); }
    const std::string& as_string() const { return std::get<std::string>(v_); }
    const List& as_list() const { return std::get<List>(v_); }

    bool is_true() const { return is_bool() && as_bool(); }

    const Storage& storage() const { return v_; }

    /// Same type and same contents (reals compared bitwise-equal as doubles).
    /// This is identity, not the language's `==`.
    friend bool operator==(const Value& a, const Value& b) { return a.v_ == b.v_; }

    /// Literal syntax: `42`, `2.5`, `"x86"`, `true`, `undefined`, `error`, `{1, 2}`.
    std::string to_string() const;

private:
    Storage v_;
};

std::string quote_string(const std::string& s);

/// Shortest representation that re-reads as the same double and always
/// contains a '.' or an exponent.
std::string format_real(double d);

} // namespace wms::jdl
