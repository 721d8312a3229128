#pragma once

#include "wms/jdl/expr.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wms::jdl {

enum class AdRole { Job, Resource };

const char* role_name(AdRole r);

/// Classified advertisement: ordered attribute map with case-insensitive
/// lookup. Re-assigning an existing name replaces the value and keeps the
/// spelling that was seen first.
class Ad {
public:
    struct Attribute {
        std::string name;
        Expr value;
    };

    Ad() = default;
    explicit Ad(AdRole role) : role_(role) {}

    AdRole role() const { return role_; }
    void set_role(AdRole r) { role_ = r; }

    void set(std::string_view name, Expr value);
    /// Null when absent.
    const Expr* find(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }

    const std::vector<Attribute>& attributes() const { return attrs_; }
    std::size_t size() const { return attrs_.size(); }

    const Expr* requirements() const { return find("Requirements"); }
    const Expr* rank() const { return find("Rank"); }

    /// `[ Name = expr; ... ]` in canonical expression form.
    std::string to_string() const;
    /// One attribute per line: `Name: <s-expression>`, preceded by `ad`.
    std::string dump() const;

private:
    AdRole role_ = AdRole::Job;
    std::vector<Attribute> attrs_;
    std::unordered_map<std::string, std::size_t> index_; // lower-cased name -> attrs_ slot
};

bool structurally_equal(const Ad& a, const Ad& b);

} // namespace wms::jdl
