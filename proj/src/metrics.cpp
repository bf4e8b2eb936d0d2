#include "migsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

namespace migsim {

double delay_time(double dmts_s, double dmtb_s) {
    if (dmts_s <= 0.0 || dmtb_s <= 0.0)
        throw NonPositiveInputError("delay_time: migration times must be positive");
    return dmts_s - dmtb_s;
}

double degradation(double delay_s, double dmtb_s) {
    if (dmtb_s <= 0.0) throw NonPositiveInputError("degradation: baseline time must be positive");
    return delay_s / dmtb_s;
}

double throughput(std::uint64_t file_size, double migration_time_s) {
    if (migration_time_s <= 0.0)
        throw NonPositiveInputError("throughput: migration time must be positive");
    return static_cast<double>(file_size) / migration_time_s;
}

std::string format_seconds(double s) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", s);
    return buf;
}

std::string format_fraction(double f) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", f);
    return buf;
}

std::string format_percent_1dp(double fraction) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
    return buf;
}

namespace {

/// baseline first, the known methods in fixed order, anything else after,
/// alphabetically
int method_rank(const std::string& m) {
    if (m == "baseline") return 0;
    if (m == "proposed") return 1;
    if (m == "secdm3") return 2;
    if (m == "secured2") return 3;
    return 4;
}

bool record_less(const BenchRecord& a, const BenchRecord& b) {
    int ra = method_rank(a.method);
    int rb = method_rank(b.method);
    if (ra != rb) return ra < rb;
    if (a.method != b.method) return a.method < b.method;
    return a.file_size < b.file_size;
}

}  // namespace

Report emit_report(const std::vector<BenchRecord>& records, const std::string& baseline_method) {
    if (records.empty()) throw EmptyInputError();

    std::vector<BenchRecord> sorted = records;
    std::sort(sorted.begin(), sorted.end(), record_less);

    std::map<std::uint64_t, double> baseline_times;
    for (const auto& r : sorted) {
        if (r.method == baseline_method) baseline_times[r.file_size] = r.migration_time_s;
    }

    Report report;
    nlohmann::ordered_json json;
    json["records"] = nlohmann::ordered_json::array();
    std::vector<std::string> anomalies;

    report.records_csv = "method,size_bytes,time_s,delay_s,degradation\n";
    for (const auto& r : sorted) {
        auto base = baseline_times.find(r.file_size);
        std::string delay_s, degradation_s;
        nlohmann::ordered_json jr;
        jr["method"] = r.method;
        jr["size_bytes"] = r.file_size;
        jr["time_s"] = r.migration_time_s;
        if (base != baseline_times.end()) {
            double delay = delay_time(r.migration_time_s, base->second);
            double deg = degradation(delay, base->second);
            delay_s = format_seconds(delay);
            degradation_s = format_fraction(deg);
            jr["delay_s"] = delay;
            jr["degradation"] = deg;
            if (delay < 0.0) {
                anomalies.push_back(r.method + "/" + std::to_string(r.file_size) +
                                    ": secured run beat baseline");
            }
        }
        report.records_csv += r.method + "," + std::to_string(r.file_size) + "," +
                              format_seconds(r.migration_time_s) + "," + delay_s + "," +
                              degradation_s + "\n";
        json["records"].push_back(jr);
    }

    // matrices: methods as rows, sizes ascending as columns
    std::set<std::uint64_t> size_set;
    std::vector<std::string> methods;
    std::map<std::string, std::map<std::uint64_t, double>> cells;
    for (const auto& r : sorted) {
        size_set.insert(r.file_size);
        if (cells.find(r.method) == cells.end()) methods.push_back(r.method);
        cells[r.method][r.file_size] = r.migration_time_s;
    }
    std::vector<std::uint64_t> sizes(size_set.begin(), size_set.end());

    auto header = [&sizes] {
        std::string h = "method";
        for (auto s : sizes) h += "," + std::to_string(s);
        return h + "\n";
    };

    report.times_matrix_csv = header();
    nlohmann::ordered_json times_matrix;
    for (const auto& m : methods) {
        std::string row = m;
        nlohmann::ordered_json jrow = nlohmann::ordered_json::array();
        for (auto s : sizes) {
            auto it = cells[m].find(s);
            if (it != cells[m].end()) {
                row += "," + format_seconds(it->second);
                jrow.push_back(it->second);
            } else {
                row += ",";
                jrow.push_back(nullptr);
            }
        }
        report.times_matrix_csv += row + "\n";
        times_matrix[m] = jrow;
    }

    report.degradation_matrix_csv = header();
    nlohmann::ordered_json degradation_matrix;
    for (const auto& m : methods) {
        if (m == baseline_method) continue;
        std::string row = m;
        nlohmann::ordered_json jrow = nlohmann::ordered_json::array();
        for (auto s : sizes) {
            auto cell = cells[m].find(s);
            auto base = baseline_times.find(s);
            if (cell != cells[m].end() && base != baseline_times.end()) {
                double deg = degradation(delay_time(cell->second, base->second), base->second);
                row += "," + format_percent_1dp(deg);
                jrow.push_back(deg);
            } else {
                row += ",";
                jrow.push_back(nullptr);
            }
        }
        report.degradation_matrix_csv += row + "\n";
        degradation_matrix[m] = jrow;
    }

    json["sizes"] = sizes;
    json["times_matrix"] = times_matrix;
    json["degradation_matrix"] = degradation_matrix;
    json["anomalies"] = anomalies;
    report.structured_json = json.dump(2) + "\n";
    return report;
}

}  // namespace migsim
