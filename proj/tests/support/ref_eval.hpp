#pragma once

// Test-only reference interpreter, independent of wms::jdl::evaluate. It
// shares only the AST types, so a disagreement points at evaluation rather
// than parsing.

#include "wms/jdl/ad.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ref {

struct RV {
    enum Kind { Undef, Err, Bool, Int, Real, Str, List } kind = Undef;
    bool b = false;
    std::int64_t i = 0;
    double r = 0;
    std::string s;
    std::vector<RV> items;
};

RV eval(const wms::jdl::Expr& e, const wms::jdl::Ad& self, const wms::jdl::Ad& other);

bool matches(const wms::jdl::Ad& job, const wms::jdl::Ad& resource);

/// 0.0 for missing or non-numeric Rank.
double rank(const wms::jdl::Ad& job, const wms::jdl::Ad& resource);

} // namespace ref
