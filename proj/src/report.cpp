#include "unlearn/report.hpp"

#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace unlearn {

double ExperimentReport::scalar(const std::string& key) const {
    for (const auto& [k, v] : scalars)
        if (k == key) return v;
    throw std::out_of_range("report '" + name + "' has no scalar '" + key + "'");
}

std::string report_to_json(const ExperimentReport& report) {
    nlohmann::ordered_json j;
    j["name"] = report.name;
    nlohmann::ordered_json js = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.scalars) js[k] = v;
    j["scalars"] = std::move(js);
    nlohmann::ordered_json jt = nlohmann::ordered_json::array();
    for (const auto& t : report.tables) {
        nlohmann::ordered_json e;
        e["name"] = t.name;
        e["columns"] = t.columns;
        e["rows"] = t.rows;
        jt.push_back(std::move(e));
    }
    j["tables"] = std::move(jt);
    nlohmann::ordered_json jr = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.traces) jr[k] = v;
    j["traces"] = std::move(jr);
    j["notes"] = report.notes;
    return j.dump(2) + "\n";
}

std::string table_to_csv(const ReportTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ',';
        out += table.columns[i];
    }
    out += '\n';
    char buf[64];
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size()) throw std::invalid_argument("table_to_csv: ragged row");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace unlearn
