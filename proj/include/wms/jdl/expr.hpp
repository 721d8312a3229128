#pragma once

#include "wms/jdl/value.hpp"

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace wms::jdl {

enum class Scope { Self, Other };

enum class UnaryOp { Not, Negate };

enum class BinaryOp { Or, And, Eq, Ne, Lt, Le, Gt, Ge, Add, Sub, Mul, Div };

const char* symbol(UnaryOp op);
const char* symbol(BinaryOp op);

struct Node;

/// Immutable, shareable expression tree. Safe to evaluate from any thread.
using Expr = std::shared_ptr<const Node>;

struct Literal {
    Value value; // never a list; list literals are ListExpr
};

struct AttrRef {
    Scope scope;
    std::string name; // as written
};

struct UnaryExpr {
    UnaryOp op;
    Expr operand;
};

struct BinaryExpr {
    BinaryOp op;
    Expr lhs;
    Expr rhs;
};

struct ListExpr {
    std::vector<Expr> items;
};

/// `member(scalar, list)`, the only builtin.
struct MemberCall {
    Expr scalar;
    Expr list;
};

struct Node {
    std::variant<Literal, AttrRef, UnaryExpr, BinaryExpr, ListExpr, MemberCall> v;
};

Expr make_literal(Value v);
Expr make_ref(Scope scope, std::string name);
Expr make_unary(UnaryOp op, Expr operand);
Expr make_binary(BinaryOp op, Expr lhs, Expr rhs);
Expr make_list(std::vector<Expr> items);
Expr make_member(Expr scalar, Expr list);

/// Canonical source form: every compound node parenthesized, every reference
/// scoped. Parsing the result yields a structurally identical tree.
std::string to_string(const Expr& e);

/// S-expression dump used by the golden corpus, e.g.
/// `(&& (== (ref other Arch) "x86") (>= (ref other FreeCPUs) 2))`.
std::string dump(const Expr& e);

/// Structural equality. Attribute names compare case-insensitively.
bool structurally_equal(const Expr& a, const Expr& b);

/// Height of the tree; a lone literal or reference has depth 0.
int depth(const Expr& e);

} // namespace wms::jdl
