#include "ballsim/report.hpp"

#include <chrono>
#include <ctime>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ballsim {

using nlohmann::json;
using nlohmann::ordered_json;

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ordered_json to_json(const RunManifest& m) {
    ordered_json j;
    j["command"] = m.command;
    j["process"] = std::string(to_string(m.config.kind));
    j["bins"] = m.n;
    j["rounds"] = m.rounds;
    j["reps"] = m.reps;
    j["seed"] = m.config.seed;
    j["d"] = m.config.d;
    j["beta"] = m.config.beta;
    j["quantile"] = m.config.quantile;
    j["bias"] = std::string(to_string(m.config.bias));
    j["bias_a"] = m.config.bias_a;
    j["bias_b"] = m.config.bias_b;
    j["alpha"] = m.alpha;
    j["stride"] = m.stride;
    j["mode"] = m.mode;
    j["tool_version"] = m.tool_version;
    j["rng"] = m.rng;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    return j;
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.command = j.value("command", "");
    const auto kind = parse_process_kind(j.at("process").get<std::string>());
    if (!kind) throw std::runtime_error("manifest: unknown process");
    m.config.kind = *kind;
    m.n = j.at("bins").get<std::size_t>();
    m.rounds = j.at("rounds").get<std::int64_t>();
    m.reps = j.value("reps", 1);
    m.config.seed = j.at("seed").get<std::uint64_t>();
    m.config.d = j.value("d", 2);
    m.config.beta = j.value("beta", 0.5);
    m.config.quantile = j.value("quantile", 0.5);
    if (const auto bias = parse_bias_kind(j.value("bias", "max_bias"))) m.config.bias = *bias;
    m.config.bias_a = j.value("bias_a", 2.0);
    m.config.bias_b = j.value("bias_b", 2.0);
    m.alpha = j.value("alpha", 0.0);
    m.stride = j.value("stride", std::int64_t{0});
    m.mode = j.value("mode", "");
    m.tool_version = j.value("tool_version", "");
    m.rng = j.value("rng", "");
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    return m;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
        if (k > 0) os_ << ',';
        os_ << csv_escape(fields[k]);
    }
    os_ << "\r\n";
}

void CsvWriter::manifest(const RunManifest& manifest) {
    row({"record", "key", "value"});
    const auto j = to_json(manifest);
    for (const auto& [key, value] : j.items()) {
        row({"manifest", key, value.is_string() ? value.get<std::string>() : value.dump()});
    }
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t k = 0; k < text.size(); ++k) {
        const char c = text[k];
        any = true;
        if (quoted) {
            if (c == '"') {
                if (k + 1 < text.size() && text[k + 1] == '"') {
                    field += '"';
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && k + 1 < text.size() && text[k + 1] == '\n') ++k;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (quoted) throw std::runtime_error("csv: unterminated quoted field");
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

ordered_json gap_result_json(const RunManifest& manifest, const ExperimentResult& result) {
    ordered_json j;
    j["manifest"] = to_json(manifest);
    ordered_json summary;
    summary["mean"] = result.summary.mean;
    summary["median"] = result.summary.median;
    summary["mode"] = result.summary.mode;
    summary["min"] = result.summary.min;
    summary["max"] = result.summary.max;
    j["summary"] = summary;
    j["timing"] = {{"wall_seconds", result.wall_seconds}};
    ordered_json histogram = ordered_json::object();
    for (const auto& [bucket, count] : result.histogram) histogram[std::to_string(bucket)] = count;
    j["histogram"] = histogram;
    ordered_json reps = ordered_json::array();
    for (const auto& r : result.repetitions) {
        reps.push_back({{"stream", r.stream},
                        {"gap", r.final_gap.str()},
                        {"balls", r.final_balls},
                        {"samples", r.final_samples}});
    }
    j["repetitions"] = reps;
    return j;
}

void write_gap_csv(std::ostream& os, const RunManifest& manifest, const ExperimentResult& result) {
    CsvWriter csv(os);
    csv.manifest(manifest);
    auto num = [](double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    };
    csv.row({"summary", "mean", num(result.summary.mean)});
    csv.row({"summary", "median", num(result.summary.median)});
    csv.row({"summary", "mode", std::to_string(result.summary.mode)});
    csv.row({"summary", "min", std::to_string(result.summary.min)});
    csv.row({"summary", "max", std::to_string(result.summary.max)});
    for (const auto& [bucket, count] : result.histogram) {
        csv.row({"histogram", std::to_string(bucket), std::to_string(count)});
    }
    for (const auto& r : result.repetitions) {
        csv.row({"gap", std::to_string(r.stream), r.final_gap.str()});
        csv.row({"balls", std::to_string(r.stream), std::to_string(r.final_balls)});
    }
}

ordered_json read_json(std::string_view text) { return ordered_json::parse(text); }

ordered_json trace_record(std::int64_t round, const RoundOutcome& outcome) {
    ordered_json j;
    j["round"] = round;
    j["sampled"] = outcome.sampled;
    j["chosen"] = outcome.chosen;
    ordered_json deltas = ordered_json::array();
    for (const auto& [bin, balls] : outcome.deltas) deltas.push_back({bin, balls});
    j["deltas"] = deltas;
    j["samples"] = outcome.samples_used;
    j["cache_before"] = outcome.cache_before ? ordered_json(*outcome.cache_before) : ordered_json(nullptr);
    j["cache"] = outcome.cache_after ? ordered_json(*outcome.cache_after) : ordered_json(nullptr);
    return j;
}

RoundOutcome outcome_from_record(const json& record) {
    RoundOutcome out;
    out.sampled = record.at("sampled").get<std::vector<Bin>>();
    out.chosen = record.at("chosen").get<Bin>();
    for (const auto& d : record.at("deltas")) out.add(d.at(0).get<Bin>(), d.at(1).get<Load>());
    out.samples_used = record.value("samples", static_cast<int>(out.sampled.size()));
    if (record.contains("cache_before") && !record["cache_before"].is_null()) {
        out.cache_before = record["cache_before"].get<Bin>();
    }
    if (record.contains("cache") && !record["cache"].is_null()) out.cache_after = record["cache"].get<Bin>();
    return out;
}

TraceWriter::TraceWriter(std::ostream& os, const RunManifest& manifest) : os_(os) {
    os_ << ordered_json{{"manifest", to_json(manifest)}}.dump() << '\n';
}

void TraceWriter::write(std::int64_t round, const RoundOutcome& outcome) {
    os_ << trace_record(round, outcome).dump() << '\n';
}

Trace read_trace(std::istream& is) {
    Trace trace;
    std::string line;
    bool header = false;
    std::int64_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!header) {
            if (!j.contains("manifest")) throw std::runtime_error("trace: first line must hold the manifest");
            trace.manifest = manifest_from_json(j["manifest"]);
            header = true;
            continue;
        }
        try {
            trace.outcomes.push_back(outcome_from_record(j));
        } catch (const json::exception& e) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!header) throw std::runtime_error("trace: empty file");
    return trace;
}

std::vector<AtomicStep> memory_steps(const Trace& trace) {
    std::vector<AtomicStep> steps;
    steps.reserve(trace.outcomes.size());
    for (const auto& o : trace.outcomes) steps.push_back(AtomicStep::from_outcome(o));
    return steps;
}

}  // namespace ballsim
