#include "wms/jdl/eval.hpp"

#include "wms/util/strings.hpp"

#include <cmath>
#include <limits>

namespace wms::jdl {

namespace {

constexpr int kMaxDepth = 64;

class Evaluator {
public:
    Value eval(const Expr& e, const Ad& self, const Ad& other)
    {
        return std::visit(
            Overload{
                [](const Literal& l) { return l.value; },
                [&](const AttrRef& r) { return lookup(r, self, other); },
                [&](const UnaryExpr& u) { return unary(u.op, eval(u.operand, self, other)); },
                [&](const BinaryExpr& b) {
                    Value lhs = eval(b.lhs, self, other);
                    Value rhs = eval(b.rhs, self, other);
                    return binary(b.op, lhs, rhs);
                },
                [&](const ListExpr& l) {
                    Value::List items;
                    items.reserve(l.items.size());
                    for (const auto& item : l.items)
                        items.push_back(eval(item, self, other));
                    return Value{std::move(items)};
                },
                [&](const MemberCall& m) {
                    return member(eval(m.scalar, self, other), eval(m.list, self, other));
                },
            },
            e->v);
    }

private:
    Value lookup(const AttrRef& r, const Ad& self, const Ad& other)
    {
        const Ad& holder = r.scope == Scope::Self ? self : other;
        const Ad& counterpart = r.scope == Scope::Self ? other : self;
        const Expr* value = holder.find(r.name);
        if (!value)
            return Value::undefined();
        if (depth_ >= kMaxDepth)
            return Value::error();
        ++depth_;
        Value v = eval(*value, holder, counterpart);
        --depth_;
        return v;
    }

    static Value unary(UnaryOp op, const Value& v)
    {
        if (v.is_error())
            return v;
        if (v.is_undefined())
            return v;
        if (op == UnaryOp::Not)
            return v.is_bool() ? Value{!v.as_bool()} : Value::error();
        if (v.is_int()) {
            if (v.as_int() == std::numeric_limits<std::int64_t>::min())
                return Value::error();
            return Value{-v.as_int()};
        }
        if (v.is_real())
            return Value{-v.as_real()};
        return Value::error();
    }

    static Value logical(BinaryOp op, const Value& a, const Value& b)
    {
        if (a.is_error() || b.is_error())
            return Value::error();
        auto ok = [](const Value& v) { return v.is_bool() || v.is_undefined(); };
        if (!ok(a) || !ok(b))
            return Value::error();
        if (op == BinaryOp::Or) {
            if (a.is_true() || b.is_true())
                return Value{true};
            if (a.is_undefined() || b.is_undefined())
                return Value::undefined();
            return Value{false};
        }
        if ((a.is_bool() && !a.as_bool()) || (b.is_bool() && !b.as_bool()))
            return Value{false};
        if (a.is_undefined() || b.is_undefined())
            return Value::undefined();
        return Value{true};
    }

    static Value compare(BinaryOp op, const Value& a, const Value& b)
    {
        int cmp = 0;
        if (a.is_number() && b.is_number()) {
            if (a.is_int() && b.is_int()) {
                cmp = a.as_int() < b.as_int() ? -1 : (a.as_int() > b.as_int() ? 1 : 0);
            } else {
                double x = a.as_number(), y = b.as_number();
                if (std::isnan(x) || std::isnan(y))
                    return Value::error();
                cmp = x < y ? -1 : (x > y ? 1 : 0);
            }
        } else if (a.is_string() && b.is_string()) {
            int c = a.as_string().compare(b.as_string());
            cmp = c < 0 ? -1 : (c > 0 ? 1 : 0);
        } else if (a.is_bool() && b.is_bool() && (op == BinaryOp::Eq || op == BinaryOp::Ne)) {
            cmp = a.as_bool() == b.as_bool() ? 0 : 1;
        } else {
            return Value::error();
        }
        switch (op) {
        case BinaryOp::Eq: return Value{cmp == 0};
        case BinaryOp::Ne: return Value{cmp != 0};
        case BinaryOp::Lt: return Value{cmp < 0};
        case BinaryOp::Le: return Value{cmp <= 0};
        case BinaryOp::Gt: return Value{cmp > 0};
        case BinaryOp::Ge: return Value{cmp >= 0};
        default: return Value::error();
        }
    }

    static Value arithmetic(BinaryOp op, const Value& a, const Value& b)
    {
        if (!a.is_number() || !b.is_number())
            return Value::error();
        if (a.is_int() && b.is_int()) {
            std::int64_t x = a.as_int(), y = b.as_int(), r = 0;
            switch (op) {
            case BinaryOp::Add:
                if (__builtin_add_overflow(x, y, &r))
                    return Value::error();
                return Value{r};
            case BinaryOp::Sub:
                if (__builtin_sub_overflow(x, y, &r))
                    return Value::error();
                return Value{r};
            case BinaryOp::Mul:
                if (__builtin_mul_overflow(x, y, &r))
                    return Value::error();
                return Value{r};
            case BinaryOp::Div:
                if (y == 0 || (x == std::numeric_limits<std::int64_t>::min() && y == -1))
                    return Value::error();
                return Value{x / y};
            default: return Value::error();
            }
        }
        double x = a.as_number(), y = b.as_number();
        switch (op) {
        case BinaryOp::Add: return Value{x + y};
        case BinaryOp::Sub: return Value{x - y};
        case BinaryOp::Mul: return Value{x * y};
        case BinaryOp::Div:
            if (y == 0.0)
                return Value::error();
            return Value{x / y};
        default: return Value::error();
        }
    }

    static Value binary(BinaryOp op, const Value& a, const Value& b)
    {
        if (op == BinaryOp::Or || op == BinaryOp::And)
            return logical(op, a, b);
        if (a.is_error() || b.is_error())
            return Value::error();
        if (a.is_undefined() || b.is_undefined())
            return Value::undefined();
        switch (op) {
        case BinaryOp::Eq:
        case BinaryOp::Ne:
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge: return compare(op, a, b);
        default: return arithmetic(op, a, b);
        }
    }

    static Value member(const Value& scalar, const Value& list)
    {
        if (scalar.is_error() || list.is_error())
            return Value::error();
        if (list.is_undefined() || scalar.is_undefined())
            return Value::undefined();
        if (!list.is_list() || scalar.is_list())
            return Value::error();
        for (const auto& item : list.as_list()) {
            if (item.is_error() || item.is_undefined())
                continue;
            if (compare(BinaryOp::Eq, scalar, item).is_true())
                return Value{true};
        }
        return Value{false};
    }

    int depth_ = 0;
};

} // namespace

Value evaluate(const Expr& expr, const Ad& self, const Ad& other)
{
    Evaluator ev;
    return ev.eval(expr, self, other);
}

bool match_ads(const Ad& job, const Ad& resource)
{
    auto side = [](const Ad& self, const Ad& other) {
        const Expr* req = self.requirements();
        return !req || evaluate(*req, self, other).is_true();
    };
    return side(job, resource) && side(resource, job);
}

RankResult rank(const Ad& job, const Ad& resource)
{
    const Expr* r = job.rank();
    if (!r)
        return {};
    Value v = evaluate(*r, job, resource);
    if (v.is_number() && std::isfinite(v.as_number()))
        return {v.as_number(), std::nullopt};
    return {0.0, "Rank evaluated to " + v.to_string() + ", using 0.0"};
}

} // namespace wms::jdl
