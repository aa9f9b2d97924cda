#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fleetguard/bytes.hpp"

namespace fleetguard::telemetry {

enum class Direction { Inbound, Outbound };
enum class EventKind { SessionOpen, SessionClose, Packet };

enum class Metric { PacketsIn, PacketsOut, OpenConnections, SessionsIn, SessionsOut };

std::string_view to_string(Direction d);
std::string_view to_string(EventKind k);
std::string_view to_string(Metric m);

/// Throw Error(UnknownEnum) on unrecognised names.
Direction parse_direction(std::string_view s);
EventKind parse_event_kind(std::string_view s);
Metric parse_metric(std::string_view s);

/// One raw network observation. `size` is only meaningful for packets.
struct ConnectionEvent {
    std::string device_id;
    Tick time = 0;
    Direction direction = Direction::Inbound;
    EventKind kind = EventKind::Packet;
    std::uint64_t size = 0;

    bool operator==(const ConnectionEvent&) const = default;
};

/// Uniformly sampled per-device, per-metric series. Bucket k covers
/// [start_time + k*interval, start_time + (k+1)*interval).
struct TelemetrySeries {
    std::string device_id;
    Metric metric = Metric::PacketsIn;
    Tick interval = 1;
    Tick start_time = 0;
    std::vector<double> values;
};

/// Builds one bucket per interval over [start, end); the last bucket may be
/// partial. Counting metrics count matching events per bucket. OpenConnections
/// is sampled at each bucket's start boundary: opens minus closes with
/// time <= boundary, including activity before `start`. Events of other
/// devices are ignored; input order does not matter.
TelemetrySeries bucketize(std::span<const ConnectionEvent> events, std::string_view device_id,
                          Metric metric, Tick interval, Tick start, Tick end);

/// Parses `time,device_id,direction,kind,size`. The size column may be empty
/// or missing on session rows. Throws ParseError (1-based data row) or
/// Error(UnknownEnum).
std::vector<ConnectionEvent> ingest_csv(std::istream& in);

/// Writes the same format `ingest_csv` reads, header included.
void write_csv(std::ostream& out, std::span<const ConnectionEvent> events);

}  // namespace fleetguard::telemetry
