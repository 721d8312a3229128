#include "wms/lb/event.hpp"

#include "wms/util/crc32.hpp"
#include "wms/util/random.hpp"
#include "wms/util/strings.hpp"

#include <array>
#include <charconv>
#include <vector>

namespace wms::lb {

namespace {

constexpr std::array<const char*, 10> kKindNames = {
    "Registered", "Enqueued", "Dequeued", "Matched", "Transferred",
    "Running",    "Done",     "Aborted",  "Cancelled", "Warning",
};

std::string escape(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '%': out += "%25"; break;
        case '|': out += "%7C"; break;
        case '\n': out += "%0A"; break;
        case '\r': out += "%0D"; break;
        default: out += c;
        }
    }
    return out;
}

std::optional<std::string> unescape(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '%') {
            out += s[i];
            continue;
        }
        if (i + 2 >= s.size())
            return std::nullopt;
        unsigned v = 0;
        auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
        if (ec != std::errc{} || p != s.data() + i + 3)
            return std::nullopt;
        out += static_cast<char>(v);
        i += 2;
    }
    return out;
}

bool hex_suffix(std::string_view s)
{
    if (s.size() < 8 || s.size() > 32)
        return false;
    for (char c : s)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')))
            return false;
    return true;
}

} // namespace

JobId JobId::mint() { return JobId("wms-" + format_compact(now()) + "-" + random_hex(12)); }

bool JobId::valid(std::string_view text)
{
    // wms-YYYYMMDDTHHMMSSZ-<hex>
    if (!starts_with(text, "wms-") || text.size() < 4 + 16 + 1 + 8)
        return false;
    std::string_view stamp = text.substr(4, 16);
    for (std::size_t i = 0; i < stamp.size(); ++i) {
        char c = stamp[i];
        bool ok = (i == 8) ? c == 'T' : (i == 15) ? c == 'Z' : (c >= '0' && c <= '9');
        if (!ok)
            return false;
    }
    return text[20] == '-' && hex_suffix(text.substr(21));
}

JobId JobId::parse(std::string_view text)
{
    if (!valid(text))
        throw std::invalid_argument("malformed job id '" + std::string(text) + "'");
    return JobId(std::string(text));
}

const char* kind_name(EventKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<EventKind> kind_from_name(std::string_view name)
{
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (name == kKindNames[i])
            return static_cast<EventKind>(i);
    return std::nullopt;
}

bool is_terminal(EventKind k)
{
    return k == EventKind::Done || k == EventKind::Aborted || k == EventKind::Cancelled;
}

std::string encode_line(const Event& e)
{
    std::string body = "v1|" + e.job.str() + "|" + kind_name(e.kind) + "|" + escape(e.arg) + "|" +
                       escape(e.source) + "|" + std::to_string(e.seq) + "|" +
                       format_rfc3339(e.timestamp) + "|";
    return body + crc32_hex(body) + "\n";
}

std::optional<Event> decode_line(std::string_view line)
{
    auto last_bar = line.rfind('|');
    if (last_bar == std::string_view::npos || line.size() - last_bar - 1 != 8)
        return std::nullopt;
    std::string_view body = line.substr(0, last_bar + 1);
    if (crc32_hex(body) != line.substr(last_bar + 1))
        return std::nullopt;
    auto fields = split(body.substr(0, body.size() - 1), '|');
    if (fields.size() != 7 || fields[0] != "v1" || !JobId::valid(fields[1]))
        return std::nullopt;
    auto kind = kind_from_name(fields[2]);
    auto arg = unescape(fields[3]);
    auto source = unescape(fields[4]);
    auto ts = parse_rfc3339(fields[6]);
    std::uint64_t seq = 0;
    auto [p, ec] = std::from_chars(fields[5].data(), fields[5].data() + fields[5].size(), seq);
    if (!kind || !arg || !source || !ts || ec != std::errc{} ||
        p != fields[5].data() + fields[5].size())
        return std::nullopt;
    return Event{JobId::parse(fields[1]), *kind, std::move(*arg), std::move(*source), seq, *ts};
}

} // namespace wms::lb
