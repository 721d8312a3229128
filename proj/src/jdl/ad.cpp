#include "wms/jdl/ad.hpp"

#include "wms/util/strings.hpp"

namespace wms::jdl {

const char* role_name(AdRole r) { return r == AdRole::Job ? "job" : "resource"; }

void Ad::set(std::string_view name, Expr value)
{
    auto key = to_lower(name);
    if (auto it = index_.find(key); it != index_.end()) {
        attrs_[it->second].value = std::move(value);
        return;
    }
    index_.emplace(std::move(key), attrs_.size());
    attrs_.push_back({std::string(name), std::move(value)});
}

const Expr* Ad::find(std::string_view name) const
{
    auto it = index_.find(to_lower(name));
    return it == index_.end() ? nullptr : &attrs_[it->second].value;
}

std::string Ad::to_string() const
{
    std::string out = "[";
    for (std::size_t i = 0; i < attrs_.size(); ++i) {
        out += i ? "; " : " ";
        out += attrs_[i].name + " = " + jdl::to_string(attrs_[i].value);
    }
    return out + (attrs_.empty() ? "]" : " ]");
}

std::string Ad::dump() const
{
    std::string out = "ad\n";
    for (const auto& a : attrs_)
        out += a.name + ": " + jdl::dump(a.value) + "\n";
    return out;
}

bool structurally_equal(const Ad& a, const Ad& b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a.attributes()[i];
        const auto& y = b.attributes()[i];
        if (x.name != y.name || !structurally_equal(x.value, y.value))
            return false;
    }
    return true;
}

} // namespace wms::jdl
