#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pairsim/engine.hpp"

namespace pairsim::io {

/// Event-file header. The digest identifies the generating RunConfig; a
/// mismatch on read is reported as a warning flag, not an error.
struct EventFileHeader {
    int format_version = 1;
    std::string config_digest;  // 16 hex chars
    double trial_period = 0.0;
    std::uint64_t trials_per_run = 0;
};

struct EventFileContents {
    EventFileHeader header;
    std::vector<engine::DetectionEvent> events;
    bool digest_checked = false;
    bool digest_mismatch = false;
};

/// Canonical text format: '#'-prefixed header lines followed by
/// "trial_index,detector,time_ns" records with time at fixed 3-decimal
/// precision, sorted by (trial_index, time). Serialization of a re-read
/// stream reproduces the file byte for byte.
void write_events(std::ostream& out, std::span<const engine::DetectionEvent> events,
                  const engine::RunConfig& cfg);
void write_events_file(const std::string& path, std::span<const engine::DetectionEvent> events,
                       const engine::RunConfig& cfg);

EventFileContents read_events(std::istream& in, const std::string& expected_digest = {});
EventFileContents read_events_file(const std::string& path, const std::string& expected_digest = {});

/// Incremental writer for streams too large to materialize.
class EventWriter {
public:
    EventWriter(const std::string& path, const engine::RunConfig& cfg);
    ~EventWriter();
    EventWriter(const EventWriter&) = delete;
    EventWriter& operator=(const EventWriter&) = delete;

    void append(std::span<const engine::DetectionEvent> events);
    void close();

private:
    struct Impl;
    Impl* impl_;
};

/// Incremental reader: yields events grouped per trial in file order.
class EventReader {
public:
    explicit EventReader(const std::string& path, const std::string& expected_digest = {});
    ~EventReader();
    EventReader(const EventReader&) = delete;
    EventReader& operator=(const EventReader&) = delete;

    const EventFileHeader& header() const;
    bool digest_mismatch() const;
    /// Events of the next trial that has any; false at end of file.
    bool next_trial(std::uint64_t& trial, std::vector<engine::DetectionEvent>& events);

private:
    struct Impl;
    Impl* impl_;
};

std::string format_event_line(const engine::DetectionEvent& ev);

}  // namespace pairsim::io
