#include "wms/jdl/value.hpp"

#include <charconv>
#include <cmath>

namespace wms::jdl {

std::string quote_string(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out += c;
        }
    }
    out += '"';
    return out;
}

std::string format_real(double d)
{
    if (std::isnan(d))
        return "error";
    if (std::isinf(d))
        return d > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
    std::string out(buf, p);
    if (out.find_first_of(".e") == std::string::npos)
        out += ".0";
    return out;
}

std::string Value::to_string() const
{
    struct Visitor {
        std::string operator()(Undefined) const { return "undefined"; }
        std::string operator()(Error) const { return "error"; }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(double d) const { return format_real(d); }
        std::string operator()(const std::string& s) const { return quote_string(s); }
        std::string operator()(const List& l) const
        {
            std::string out = "{";
            for (std::size_t i = 0; i < l.size(); ++i) {
                if (i)
                    out += ", ";
                out += l[i].to_string();
            }
            return out + "}";
        }
    };
    return std::visit(Visitor{}, v_);
}

} // namespace wms::jdl
