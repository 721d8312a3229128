#pragma once

#include "wms/jdl/ad.hpp"
#include "wms/jdl/expr.hpp"
#include "wms/jdl/value.hpp"

#include <optional>
#include <string>

namespace wms::jdl {

/// Evaluates `expr` with `self` and `other` as the two scopes.
///
/// Three-valued: a reference to a missing attribute is UNDEFINED; ERROR in
/// any operand makes the result ERROR; `UNDEFINED || true` is true and
/// `UNDEFINED && false` is false, every other boolean form that mixes in
/// UNDEFINED is UNDEFINED. Type mismatches and division by zero give ERROR.
/// Attribute values are evaluated in the scope of the ad that holds them;
/// reference cycles evaluate to ERROR.
Value evaluate(const Expr& expr, const Ad& self, const Ad& other);

/// Both Requirements evaluate to exactly `true`, each with itself as `self`.
/// A missing Requirements counts as true.
bool match_ads(const Ad& job, const Ad& resource);

struct RankResult {
    double value = 0.0;
    /// Set when Rank existed but did not yield a finite number.
    std::optional<std::string> warning;
};

/// Numeric job Rank with self=job, other=resource. Missing Rank is 0.0.
RankResult rank(const Ad& job, const Ad& resource);

} // namespace wms::jdl
