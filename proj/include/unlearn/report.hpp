#pragma once

#include <string>
#include <utility>
#include <vector>

namespace unlearn {

// Structured experiment output: named scalars, small numeric tables, and
// per-epoch traces. Serialization is deterministic (insertion order kept,
// shortest round-trip doubles) so reruns produce byte-identical files.

struct ReportTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct ExperimentReport {
    std::string name;
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<ReportTable> tables;
    std::vector<std::pair<std::string, std::vector<double>>> traces;
    std::vector<std::string> notes;

    void add_scalar(std::string key, double value) { scalars.emplace_back(std::move(key), value); }
    void add_trace(std::string key, std::vector<double> values) { traces.emplace_back(std::move(key), std::move(values)); }
    void add_note(std::string note) { notes.push_back(std::move(note)); }
    double scalar(const std::string& key) const;  // throws std::out_of_range if absent
};

std::string report_to_json(const ExperimentReport& report);

// Header line plus one %.17g-formatted row per entry.
std::string table_to_csv(const ReportTable& table);

}  // namespace unlearn
