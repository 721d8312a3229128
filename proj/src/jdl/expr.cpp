#include "wms/jdl/expr.hpp"

#include "wms/util/strings.hpp"

#include <algorithm>

namespace wms::jdl {

const char* symbol(UnaryOp op)
{
    switch (op) {
    case UnaryOp::Not: return "!";
    case UnaryOp::Negate: return "-";
    }
    return "?";
}

const char* symbol(BinaryOp op)
{
    switch (op) {
    case BinaryOp::Or: return "||";
    case BinaryOp::And: return "&&";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    }
    return "?";
}

Expr make_literal(Value v) { return std::make_shared<const Node>(Node{Literal{std::move(v)}}); }

Expr make_ref(Scope scope, std::string name)
{
    return std::make_shared<const Node>(Node{AttrRef{scope, std::move(name)}});
}

Expr make_unary(UnaryOp op, Expr operand)
{
    return std::make_shared<const Node>(Node{UnaryExpr{op, std::move(operand)}});
}

Expr make_binary(BinaryOp op, Expr lhs, Expr rhs)
{
    return std::make_shared<const Node>(Node{BinaryExpr{op, std::move(lhs), std::move(rhs)}});
}

Expr make_list(std::vector<Expr> items)
{
    return std::make_shared<const Node>(Node{ListExpr{std::move(items)}});
}

Expr make_member(Expr scalar, Expr list)
{
    return std::make_shared<const Node>(Node{MemberCall{std::move(scalar), std::move(list)}});
}

namespace {

const char* scope_name(Scope s) { return s == Scope::Self ? "self" : "other"; }

} // namespace

std::string to_string(const Expr& e)
{
    return std::visit(
        Overload{
            [](const Literal& l) { return l.value.to_string(); },
            [](const AttrRef& r) { return std::string(scope_name(r.scope)) + "." + r.name; },
            [](const UnaryExpr& u) {
                return std::string("(") + symbol(u.op) + to_string(u.operand) + ")";
            },
            [](const BinaryExpr& b) {
                return "(" + to_string(b.lhs) + " " + symbol(b.op) + " " + to_string(b.rhs) + ")";
            },
            [](const ListExpr& l) {
                std::string out = "{";
                for (std::size_t i = 0; i < l.items.size(); ++i) {
                    if (i)
                        out += ", ";
                    out += to_string(l.items[i]);
                }
                return out + "}";
            },
            [](const MemberCall& m) {
                return "member(" + to_string(m.scalar) + ", " + to_string(m.list) + ")";
            },
        },
        e->v);
}

std::string dump(const Expr& e)
{
    return std::visit(
        Overload{
            [](const Literal& l) { return l.value.to_string(); },
            [](const AttrRef& r) {
                return std::string("(ref ") + scope_name(r.scope) + " " + r.name + ")";
            },
            [](const UnaryExpr& u) {
                return std::string("(") + (u.op == UnaryOp::Not ? "!" : "neg") + " " +
                       dump(u.operand) + ")";
            },
            [](const BinaryExpr& b) {
                return std::string("(") + symbol(b.op) + " " + dump(b.lhs) + " " + dump(b.rhs) + ")";
            },
            [](const ListExpr& l) {
                std::string out = "(list";
                for (const auto& item : l.items)
                    out += " " + dump(item);
                return out + ")";
            },
            [](const MemberCall& m) {
                return "(member " + dump(m.scalar) + " " + dump(m.list) + ")";
            },
        },
        e->v);
}

bool structurally_equal(const Expr& a, const Expr& b)
{
    if (a->v.index() != b->v.index())
        return false;
    return std::visit(
        Overload{
            [&](const Literal& l) { return l.value == std::get<Literal>(b->v).value; },
            [&](const AttrRef& r) {
                const auto& o = std::get<AttrRef>(b->v);
                return r.scope == o.scope && iequals(r.name, o.name);
            },
            [&](const UnaryExpr& u) {
                const auto& o = std::get<UnaryExpr>(b->v);
                return u.op == o.op && structurally_equal(u.operand, o.operand);
            },
            [&](const BinaryExpr& x) {
                const auto& o = std::get<BinaryExpr>(b->v);
                return x.op == o.op && structurally_equal(x.lhs, o.lhs) &&
                       structurally_equal(x.rhs, o.rhs);
            },
            [&](const ListExpr& l) {
                const auto& o = std::get<ListExpr>(b->v);
                return l.items.size() == o.items.size() &&
                       std::equal(l.items.begin(), l.items.end(), o.items.begin(),
                                  [](const Expr& x, const Expr& y) {
                                      return structurally_equal(x, y);
                                  });
            },
            [&](const MemberCall& m) {
                const auto& o = std::get<MemberCall>(b->v);
                return structurally_equal(m.scalar, o.scalar) && structurally_equal(m.list, o.list);
            },
        },
        a->v);
}

int depth(const Expr& e)
{
    return std::visit(Overload{
                          [](const Literal&) { return 0; },
                          [](const AttrRef&) { return 0; },
                          [](const UnaryExpr& u) { return 1 + depth(u.operand); },
                          [](const BinaryExpr& b) { return 1 + std::max(depth(b.lhs), depth(b.rhs)); },
                          [](const ListExpr& l) {
                              int d = 0;
                              for (const auto& i : l.items)
                                  d = std::max(d, depth(i));
                              return 1 + d;
                          },
                          [](const MemberCall& m) {
                              return 1 + std::max(depth(m.scalar), depth(m.list));
                          },
                      },
                      e->v);
}

} // namespace wms::jdl
