#include "fleetguard/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>

#include "fleetguard/error.hpp"

namespace fleetguard::telemetry {

namespace {

constexpr std::string_view kHeader = "time,device_id,direction,kind,size";

std::vector<std::string_view> split_row(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        fields.push_back(line.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return fields;
}

template <typename T>
bool parse_integer(std::string_view s, T& out)
{
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool matches(const ConnectionEvent& e, Metric metric)
{
    switch (metric) {
        case Metric::PacketsIn:
            return e.kind == EventKind::Packet && e.direction == Direction::Inbound;
        case Metric::PacketsOut:
            return e.kind == EventKind::Packet && e.direction == Direction::Outbound;
        case Metric::SessionsIn:
            return e.kind == EventKind::SessionOpen && e.direction == Direction::Inbound;
        case Metric::SessionsOut:
            return e.kind == EventKind::SessionOpen && e.direction == Direction::Outbound;
        case Metric::OpenConnections:
            return false;
    }
    return false;
}

}  // namespace

std::string_view to_string(Direction d)
{
    return d == Direction::Inbound ? "inbound" : "outbound";
}

std::string_view to_string(EventKind k)
{
    switch (k) {
        case EventKind::SessionOpen: return "session_open";
        case EventKind::SessionClose: return "session_close";
        case EventKind::Packet: return "packet";
    }
    return "packet";
}

std::string_view to_string(Metric m)
{
    switch (m) {
        case Metric::PacketsIn: return "packets_in";
        case Metric::PacketsOut: return "packets_out";
        case Metric::OpenConnections: return "open_connections";
        case Metric::SessionsIn: return "sessions_in";
        case Metric::SessionsOut: return "sessions_out";
    }
    return "packets_in";
}

Direction parse_direction(std::string_view s)
{
    if (s == "inbound") return Direction::Inbound;
    if (s == "outbound") return Direction::Outbound;
    throw Error(Errc::UnknownEnum, "direction '" + std::string(s) + "'");
}

EventKind parse_event_kind(std::string_view s)
{
    if (s == "session_open") return EventKind::SessionOpen;
    if (s == "session_close") return EventKind::SessionClose;
    if (s == "packet") return EventKind::Packet;
    throw Error(Errc::UnknownEnum, "kind '" + std::string(s) + "'");
}

Metric parse_metric(std::string_view s)
{
    for (auto m : {Metric::PacketsIn, Metric::PacketsOut, Metric::OpenConnections,
                   Metric::SessionsIn, Metric::SessionsOut}) {
        if (s == to_string(m)) return m;
    }
    throw Error(Errc::UnknownEnum, "metric '" + std::string(s) + "'");
}

TelemetrySeries bucketize(std::span<const ConnectionEvent> events, std::string_view device_id,
                          Metric metric, Tick interval, Tick start, Tick end)
{
    if (interval <= 0) {
        throw Error(Errc::NegativeInterval, "interval must be positive, got " + std::to_string(interval));
    }
    if (start >= end) {
        throw Error(Errc::EmptyRange,
                    "[" + std::to_string(start) + ", " + std::to_string(end) + ") is empty");
    }

    TelemetrySeries series;
    series.device_id = std::string(device_id);
    series.metric = metric;
    series.interval = interval;
    series.start_time = start;
    const auto buckets = static_cast<std::size_t>((end - start + interval - 1) / interval);
    series.values.assign(buckets, 0.0);

    if (metric != Metric::OpenConnections) {
        for (const auto& e : events) {
            if (e.device_id != device_id || e.time < start || e.time >= end) continue;
            if (matches(e, metric)) {
                series.values[static_cast<std::size_t>((e.time - start) / interval)] += 1.0;
            }
        }
        return series;
    }

    // Net open/close delta per bucket boundary; activity at or before a
    // boundary counts towards it.
    std::vector<std::int64_t> delta(buckets, 0);
    std::int64_t open = 0;
    for (const auto& e : events) {
        if (e.device_id != device_id || e.kind == EventKind::Packet || e.time >= end) continue;
        const std::int64_t step = e.kind == EventKind::SessionOpen ? 1 : -1;
        if (e.time <= start) {
            open += step;
        } else {
            // first boundary b with b >= e.time
            const auto k = static_cast<std::size_t>((e.time - start + interval - 1) / interval);
            if (k < buckets) delta[k] += step;
        }
    }
    for (std::size_t k = 0; k < buckets; ++k) {
        open += delta[k];
        series.values[k] = static_cast<double>(open);
    }
    return series;
}

std::vector<ConnectionEvent> ingest_csv(std::istream& in)
{
    std::vector<ConnectionEvent> events;
    std::string line;
    if (!std::getline(in, line)) return events;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) {
        throw ParseError(0, "expected header '" + std::string(kHeader) + "'");
    }

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto fields = split_row(line);
        if (fields.size() < 4 || fields.size() > 5) {
            throw ParseError(row, "expected 5 columns, got " + std::to_string(fields.size()));
        }
        ConnectionEvent e;
        if (!parse_integer(fields[0], e.time) || e.time < 0) {
            throw ParseError(row, "bad time '" + std::string(fields[0]) + "'");
        }
        if (fields[1].empty()) throw ParseError(row, "empty device_id");
        e.device_id = std::string(fields[1]);
        e.direction = parse_direction(fields[2]);
        e.kind = parse_event_kind(fields[3]);
        const std::string_view size = fields.size() == 5 ? fields[4] : std::string_view{};
        if (size.empty()) {
            if (e.kind == EventKind::Packet) throw ParseError(row, "packet rows need a size");
        } else if (!parse_integer(size, e.size)) {
            throw ParseError(row, "bad size '" + std::string(size) + "'");
        }
        if (e.kind != EventKind::Packet && e.size != 0) {
            throw ParseError(row, "session rows must have size 0");
        }
        events.push_back(std::move(e));
    }
    return events;
}

void write_csv(std::ostream& out, std::span<const ConnectionEvent> events)
{
    out << kHeader << '\n';
    for (const auto& e : events) {
        out << e.time << ',' << e.device_id << ',' << to_string(e.direction) << ','
            << to_string(e.kind) << ',' << e.size << '\n';
    }
}

}  // namespace fleetguard::telemetry
