#include "wms/pipeline/limits.hpp"

#include <stdexcept>

namespace wms::pipeline {

const char* limit_reason(Resource r)
{
    switch (r) {
    case Resource::Worker: return "max-workers";
    case Resource::Request: return "max-requests";
    case Resource::Lease: return "max-leases";
    }
    return "?";
}

std::size_t LimitsConfig::cap(Resource r) const
{
    switch (r) {
    case Resource::Worker: return max_workers;
    case Resource::Request: return max_requests;
    case Resource::Lease: return max_leases;
    }
    return 0;
}

Limits::Limits(LimitsConfig cfg) : cfg_(cfg)
{
    for (auto r : {Resource::Worker, Resource::Request, Resource::Lease})
        if (cfg_.cap(r) < 1)
            throw std::invalid_argument(std::string(limit_reason(r)) + " must be at least 1");
}

Decision Limits::try_acquire(Resource r)
{
    auto& c = slot(r);
    std::size_t cap = cfg_.cap(r);
    std::size_t cur = c.current.load();
    do {
        if (cur >= cap) {
            c.rejected.fetch_add(1);
            return {false, limit_reason(r)};
        }
    } while (!c.current.compare_exchange_weak(cur, cur + 1));
    std::size_t hw = c.high.load();
    while (cur + 1 > hw && !c.high.compare_exchange_weak(hw, cur + 1)) {
    }
    return {true, {}};
}

void Limits::release(Resource r)
{
    auto& c = slot(r);
    std::size_t cur = c.current.load();
    do {
        if (cur == 0)
            throw std::logic_error(std::string("release without acquire: ") + limit_reason(r));
    } while (!c.current.compare_exchange_weak(cur, cur - 1));
}

std::optional<Limits::Slot> Limits::acquire(Resource r, std::string* why)
{
    auto d = try_acquire(r);
    if (!d) {
        if (why)
            *why = d.reason;
        return std::nullopt;
    }
    return Slot(this, r);
}

} // namespace wms::pipeline
