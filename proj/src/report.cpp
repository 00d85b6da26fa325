#include "mpflow/harness.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace mpflow::harness {

namespace {

void add(Report& r, const std::string& name, double value, double tol, Relation rel) {
    bool pass = false;
    if (std::isfinite(value)) {
        switch (rel) {
            case Relation::AtMost: pass = value <= tol; break;
            case Relation::Above: pass = value > tol; break;
            case Relation::Below: pass = value < tol; break;
        }
    }
    r.checks.push_back(Check{name, value, tol, rel, pass});
}

const char* relation_name(Relation r) {
    switch (r) {
        case Relation::AtMost: return "<=";
        case Relation::Above: return ">";
        case Relation::Below: return "<";
    }
    return "?";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    out << content;
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

}  // namespace

void Report::at_most(const std::string& name, double value, double tol) { add(*this, name, value, tol, Relation::AtMost); }
void Report::above(const std::string& name, double value, double tol) { add(*this, name, value, tol, Relation::Above); }
void Report::below(const std::string& name, double value, double tol) { add(*this, name, value, tol, Relation::Below); }

bool Report::pass() const {
    if (checks.empty()) return false;
    for (const auto& c : checks) {
        if (!c.pass) return false;
    }
    return true;
}

const Check* Report::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_csv(const CsvTable& t) {
    std::string s;
    for (const auto& m : t.meta) s += "# " + m + "\n";
    for (std::size_t i = 0; i < t.header.size(); ++i) s += (i ? "," : "") + t.header[i];
    if (!t.header.empty()) s += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + format_number(row[i]);
        s += "\n";
    }
    return s;
}

void emit_csv(const CsvTable& table, const std::string& path) { write_file(path, format_csv(table)); }

std::string report_json(const Report& r) {
    using json = nlohmann::ordered_json;
    json j;
    j["experiment"] = r.experiment;
    j["scenario"] = r.scenario;
    j["seed"] = r.seed;
    j["prng"] = "splitmix64";
    j["pass"] = r.pass();
    json checks = json::array();
    for (const auto& c : r.checks) {
        json e;
        e["name"] = c.name;
        e["value"] = std::isfinite(c.value) ? json(c.value) : json(format_number(c.value));
        e["tol"] = c.tol;
        e["relation"] = relation_name(c.relation);
        e["pass"] = c.pass;
        checks.push_back(e);
    }
    j["checks"] = checks;
    j["oracles"] = r.oracles;
    j["failures"] = r.failures;
    j["files"] = r.files;
    return j.dump(2) + "\n";
}

void emit_report(const Report& report, const std::string& path) { write_file(path, report_json(report)); }

void write_outputs(ExperimentOutput& out, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir + "': " + ec.message());
    for (const auto& [name, table] : out.tables) {
        emit_csv(table, (std::filesystem::path(dir) / name).string());
        out.report.files.push_back(name);
    }
    emit_report(out.report, (std::filesystem::path(dir) / "report.json").string());
}

}  // namespace mpflow::harness
