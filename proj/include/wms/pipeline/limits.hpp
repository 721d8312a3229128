#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>

namespace wms::pipeline {

enum class Resource { Worker, Request, Lease };
inline constexpr std::size_t kResourceKinds = 3;

/// "max-workers", "max-requests", "max-leases".
const char* limit_reason(Resource r);

struct LimitsConfig {
    std::size_t max_workers = 16;
    std::size_t max_requests = 64; // request objects held in memory by workers
    std::size_t max_leases = 64;

    std::size_t cap(Resource r) const;
};

struct Decision {
    bool admitted = false;
    std::string reason; // empty when admitted

    explicit operator bool() const { return admitted; }
};

/// Live counters for the system-wide caps. Lock-free: admission is a CAS loop
/// that never lets a counter pass its cap, even transiently.
class Limits {
public:
    explicit Limits(LimitsConfig cfg);

    const LimitsConfig& config() const { return cfg_; }

    Decision try_acquire(Resource r);
    void release(Resource r);

    std::size_t current(Resource r) const { return slot(r).current.load(); }
    std::size_t high_water(Resource r) const { return slot(r).high.load(); }
    std::size_t rejections(Resource r) const { return slot(r).rejected.load(); }

    /// RAII handle for one admitted unit.
    class Slot {
    public:
        Slot() = default;
        Slot(Limits* owner, Resource r) : owner_(owner), r_(r) {}
        Slot(Slot&& o) noexcept : owner_(std::exchange(o.owner_, nullptr)), r_(o.r_) {}
        Slot& operator=(Slot&& o) noexcept
        {
            if (this != &o) {
                reset();
                owner_ = std::exchange(o.owner_, nullptr);
                r_ = o.r_;
            }
            return *this;
        }
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;
        ~Slot() { reset(); }

        void reset()
        {
            if (owner_)
                std::exchange(owner_, nullptr)->release(r_);
        }
        explicit operator bool() const { return owner_ != nullptr; }

    private:
        Limits* owner_ = nullptr;
        Resource r_ = Resource::Worker;
    };

    /// Empty when rejected; the reason is in `why` if given.
    std::optional<Slot> acquire(Resource r, std::string* why = nullptr);

private:
    struct Counter {
        std::atomic<std::size_t> current{0};
        std::atomic<std::size_t> high{0};
        std::atomic<std::size_t> rejected{0};
    };
    Counter& slot(Resource r) { return counters_[static_cast<std::size_t>(r)]; }
    const Counter& slot(Resource r) const { return counters_[static_cast<std::size_t>(r)]; }

    LimitsConfig cfg_;
    std::array<Counter, kResourceKinds> counters_;
};

} // namespace wms::pipeline
