#include "wms/pipeline/guardian.hpp"

namespace wms::pipeline {

const char* ward_kind_name(WardKind k)
{
    switch (k) {
    case WardKind::Worker: return "worker";
    case WardKind::Lease: return "lease";
    case WardKind::Job: return "job";
    }
    return "?";
}

const char* action_name(RecoveryAction a)
{
    switch (a) {
    case RecoveryAction::RestartWorker: return "restart-worker";
    case RecoveryAction::ReclaimLease: return "reclaim-lease";
    case RecoveryAction::AbortJob: return "abort-job";
    }
    return "?";
}

void GuardianRegistry::add(GuardianRecord r)
{
    std::lock_guard lk(mu_);
    auto ward = r.ward;
    records_[ward] = std::move(r);
}

void GuardianRegistry::heartbeat(const std::string& ward, TimePoint at)
{
    std::lock_guard lk(mu_);
    auto it = records_.find(ward);
    if (it == records_.end())
        return;
    it->second.last_heartbeat = at;
    it->second.fired = false;
}

void GuardianRegistry::remove(const std::string& ward)
{
    std::lock_guard lk(mu_);
    records_.erase(ward);
}

std::optional<GuardianRecord> GuardianRegistry::get(const std::string& ward) const
{
    std::lock_guard lk(mu_);
    auto it = records_.find(ward);
    if (it == records_.end())
        return std::nullopt;
    return it->second;
}

std::vector<GuardianRecord> GuardianRegistry::records() const
{
    std::lock_guard lk(mu_);
    std::vector<GuardianRecord> out;
    for (auto& [_, r] : records_)
        out.push_back(r);
    return out;
}

std::size_t GuardianRegistry::size() const
{
    std::lock_guard lk(mu_);
    return records_.size();
}

std::size_t GuardianRegistry::count(WardKind k, const std::string& detail) const
{
    std::lock_guard lk(mu_);
    std::size_t n = 0;
    for (auto& [_, r] : records_)
        if (r.kind == k && (detail.empty() || r.detail == detail))
            ++n;
    return n;
}

void GuardianRegistry::clear()
{
    std::lock_guard lk(mu_);
    records_.clear();
}

std::vector<GuardianRecord> GuardianRegistry::due(TimePoint at) const
{
    std::lock_guard lk(mu_);
    std::vector<GuardianRecord> out;
    for (auto& [_, r] : records_)
        if (!r.fired && at - r.last_heartbeat > r.threshold)
            out.push_back(r);
    return out;
}

void GuardianRegistry::mark_fired(const std::string& ward)
{
    std::lock_guard lk(mu_);
    auto it = records_.find(ward);
    if (it != records_.end())
        it->second.fired = true;
}

std::vector<ActionTaken> supervise(GuardianRegistry& registry, TimePoint at,
                                   const std::function<ActionTaken(const GuardianRecord&)>& execute)
{
    std::vector<ActionTaken> taken;
    for (const auto& rec : registry.due(at)) {
        ActionTaken a = execute(rec);
        if (a.done)
            registry.mark_fired(rec.ward);
        taken.push_back(std::move(a));
    }
    return taken;
}

} // namespace wms::pipeline
