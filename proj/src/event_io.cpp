#include "pairsim/event_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "pairsim/config.hpp"

namespace pairsim::io {

namespace {

constexpr int kFormatVersion = 1;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("events: " + msg); }

void write_header(std::ostream& out, const engine::RunConfig& cfg) {
    char buf[128];
    out << "# pairsim events v" << kFormatVersion << "\n";
    out << "# config_digest=" << digest_hex(config_digest(cfg)) << "\n";
    std::snprintf(buf, sizeof buf, "# trial_period=%.3f\n", cfg.timing.trial_period);
    out << buf;
    out << "# trials_per_run=" << cfg.timing.trials_per_run << "\n";
    out << "# columns=trial_index,detector,time_ns\n";
}

struct LineParser {
    std::uint64_t line_no = 0;
    std::uint64_t prev_trial = 0;
    double prev_time = -1.0;
    bool any = false;

    engine::DetectionEvent parse(const std::string& line) {
        std::uint64_t trial = 0;
        char det[8] = {0};
        double time = 0.0;
        if (std::sscanf(line.c_str(), "%" SCNu64 ",%6[^,],%lf", &trial, det, &time) != 3)
            fail("malformed line " + std::to_string(line_no));
        engine::Detector d;
        if (std::strcmp(det, "D1") == 0) d = engine::Detector::d1;
        else if (std::strcmp(det, "D2") == 0) d = engine::Detector::d2;
        else fail("malformed line " + std::to_string(line_no) + ": bad detector '" + det + "'");
        if (any && (trial < prev_trial || (trial == prev_trial && time < prev_time)))
            fail("unsorted at line " + std::to_string(line_no));
        any = true;
        prev_trial = trial;
        prev_time = time;
        return {trial, d, time};
    }
};

EventFileHeader parse_header(std::istream& in, std::uint64_t& line_no) {
    EventFileHeader h;
    std::string line;
    bool version_seen = false;
    while (in.peek() == '#') {
        std::getline(in, line);
        ++line_no;
        if (line.rfind("# pairsim events v", 0) == 0) {
            h.format_version = std::atoi(line.c_str() + std::strlen("# pairsim events v"));
            version_seen = true;
        } else if (line.rfind("# config_digest=", 0) == 0) {
            h.config_digest = line.substr(std::strlen("# config_digest="));
        } else if (line.rfind("# trial_period=", 0) == 0) {
            h.trial_period = std::atof(line.c_str() + std::strlen("# trial_period="));
        } else if (line.rfind("# trials_per_run=", 0) == 0) {
            h.trials_per_run = std::strtoull(line.c_str() + std::strlen("# trials_per_run="), nullptr, 10);
        }
        // other comment lines are ignored
    }
    if (!version_seen) fail("missing format header line");
    if (h.format_version != kFormatVersion)
        fail("unsupported format version " + std::to_string(h.format_version));
    return h;
}

}  // namespace

std::string format_event_line(const engine::DetectionEvent& ev) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%" PRIu64 ",%s,%.3f", ev.trial_index,
                  ev.detector == engine::Detector::d1 ? "D1" : "D2", ev.time);
    return buf;
}

void write_events(std::ostream& out, std::span<const engine::DetectionEvent> events,
                  const engine::RunConfig& cfg) {
    write_header(out, cfg);
    for (const auto& ev : events) out << format_event_line(ev) << "\n";
}

void write_events_file(const std::string& path, std::span<const engine::DetectionEvent> events,
                       const engine::RunConfig& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open '" + path + "' for writing");
    write_events(out, events, cfg);
    if (!out) fail("write failed for '" + path + "'");
}

EventFileContents read_events(std::istream& in, const std::string& expected_digest) {
    EventFileContents out;
    std::uint64_t line_no = 0;
    out.header = parse_header(in, line_no);
    if (!expected_digest.empty()) {
        out.digest_checked = true;
        out.digest_mismatch = expected_digest != out.header.config_digest;
    }
    LineParser parser;
    std::string line;
    while (std::getline(in, line)) {
        parser.line_no = ++line_no;
        if (line.empty()) continue;
        out.events.push_back(parser.parse(line));
    }
    return out;
}

EventFileContents read_events_file(const std::string& path, const std::string& expected_digest) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open '" + path + "'");
    return read_events(in, expected_digest);
}

struct EventWriter::Impl {
    std::ofstream out;
};

EventWriter::EventWriter(const std::string& path, const engine::RunConfig& cfg) : impl_(new Impl) {
    impl_->out.open(path, std::ios::binary);
    if (!impl_->out) {
        delete impl_;
        fail("cannot open '" + path + "' for writing");
    }
    write_header(impl_->out, cfg);
}

EventWriter::~EventWriter() { delete impl_; }

void EventWriter::append(std::span<const engine::DetectionEvent> events) {
    for (const auto& ev : events) impl_->out << format_event_line(ev) << "\n";
}

void EventWriter::close() {
    impl_->out.close();
    if (impl_->out.fail()) fail("write failed on close");
}

struct EventReader::Impl {
    std::ifstream in;
    EventFileHeader header;
    bool digest_mismatch = false;
    LineParser parser;
    bool pending = false;
    engine::DetectionEvent pending_event;
    std::uint64_t line_no = 0;
};

EventReader::EventReader(const std::string& path, const std::string& expected_digest)
    : impl_(new Impl) {
    impl_->in.open(path, std::ios::binary);
    if (!impl_->in) {
        delete impl_;
        fail("cannot open '" + path + "'");
    }
    impl_->header = parse_header(impl_->in, impl_->line_no);
    if (!expected_digest.empty())
        impl_->digest_mismatch = expected_digest != impl_->header.config_digest;
}

EventReader::~EventReader() { delete impl_; }

const EventFileHeader& EventReader::header() const { return impl_->header; }
bool EventReader::digest_mismatch() const { return impl_->digest_mismatch; }

bool EventReader::next_trial(std::uint64_t& trial, std::vector<engine::DetectionEvent>& events) {
    events.clear();
    auto& im = *impl_;
    if (!im.pending) {
        std::string line;
        while (std::getline(im.in, line)) {
            im.parser.line_no = ++im.line_no;
            if (line.empty()) continue;
            im.pending_event = im.parser.parse(line);
            im.pending = true;
            break;
        }
        if (!im.pending) return false;
    }
    trial = im.pending_event.trial_index;
    events.push_back(im.pending_event);
    im.pending = false;
    std::string line;
    while (std::getline(im.in, line)) {
        im.parser.line_no = ++im.line_no;
        if (line.empty()) continue;
        const auto ev = im.parser.parse(line);
        if (ev.trial_index != trial) {
            im.pending_event = ev;
            im.pending = true;
            break;
        }
        events.push_back(ev);
    }
    return true;
}

}  // namespace pairsim::io
