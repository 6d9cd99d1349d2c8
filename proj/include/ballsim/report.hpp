#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ballsim/experiments.hpp"
#include "ballsim/processes.hpp"
#include "ballsim/unfolding.hpp"

namespace ballsim {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Everything needed to re-run an output file.
struct RunManifest {
    std::string command;
    ProcessConfig config;
    std::size_t n = 0;
    std::int64_t rounds = 0;
    int reps = 1;
    double alpha = 0;
    std::int64_t stride = 0;
    std::string mode;
    std::string tool_version = std::string(kToolVersion);
    std::string rng = std::string(kRngId);
    std::string started_at;
    std::string finished_at;
};

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

nlohmann::ordered_json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

/// One CSV field, quoted when it holds a comma, quote or line break.
std::string csv_escape(std::string_view field);

/**
 * RFC 4180 writer: CRLF record separators, every record with the same
 * number of fields. Output files use the three columns record,key,value;
 * the manifest occupies the first records.
 */
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}
    void row(const std::vector<std::string>& fields);
    void manifest(const RunManifest& manifest);

private:
    std::ostream& os_;
};

/// RFC 4180 reader for files written by CsvWriter.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Gap experiment as a JSON document (manifest, summary, histogram, per-repetition results).
nlohmann::ordered_json gap_result_json(const RunManifest& manifest, const ExperimentResult& result);
void write_gap_csv(std::ostream& os, const RunManifest& manifest, const ExperimentResult& result);

/// Parses a JSON document written by this tool.
nlohmann::ordered_json read_json(std::string_view text);

// Trace files: newline-delimited JSON, a {"manifest": ...} header line, then
// one record per round.
nlohmann::ordered_json trace_record(std::int64_t round, const RoundOutcome& outcome);
RoundOutcome outcome_from_record(const nlohmann::json& record);

struct Trace {
    RunManifest manifest;
    std::vector<RoundOutcome> outcomes;
};

class TraceWriter {
public:
    TraceWriter(std::ostream& os, const RunManifest& manifest);
    void write(std::int64_t round, const RoundOutcome& outcome);

private:
    std::ostream& os_;
};

/// Throws std::runtime_error on a malformed file.
Trace read_trace(std::istream& is);

/// Atomic steps of a Memory trace (every record must place a single ball).
std::vector<AtomicStep> memory_steps(const Trace& trace);

}  // namespace ballsim
