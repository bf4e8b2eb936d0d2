#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace migsim {

class NonPositiveInputError : public std::invalid_argument {
public:
    explicit NonPositiveInputError(const std::string& what) : std::invalid_argument(what) {}
};
class EmptyInputError : public std::invalid_argument {
public:
    EmptyInputError() : std::invalid_argument("no records to report") {}
};

struct BenchRecord {
    std::string method;
    std::uint64_t file_size = 0;  // bytes
    double migration_time_s = 0.0;
};

/// Extra seconds a secured method spent versus the plain run of the same
/// size. Negative means the secured run beat the baseline; callers flag
/// that as an anomaly rather than erroring.
double delay_time(double dmts_s, double dmtb_s);  // throws NonPositiveInputError

/// Delay as a fraction of the baseline time.
double degradation(double delay_s, double dmtb_s);  // throws NonPositiveInputError

double throughput(std::uint64_t file_size, double migration_time_s);  // bytes/second

enum class ReportFormat { csv, structured };

struct Report {
    /// rows: method,size_bytes,time_s,delay_s,degradation  (canonical sort)
    std::string records_csv;
    /// method x size matrices, sizes ascending, methods canonical
    std::string times_matrix_csv;
    std::string degradation_matrix_csv;
    /// structured mirror of all of the above
    std::string structured_json;

    std::string primary(ReportFormat f) const {
        return f == ReportFormat::csv ? records_csv : structured_json;
    }
};

/// Deterministic report over bench records. Baseline rows anchor the delay
/// and degradation columns; sizes missing a baseline row get blank cells.
/// Throws EmptyInputError.
Report emit_report(const std::vector<BenchRecord>& records,
                   const std::string& baseline_method = "baseline");

/// Fixed-precision float formatting used by every report writer.
std::string format_seconds(double s);
std::string format_fraction(double f);
std::string format_percent_1dp(double fraction);

}  // namespace migsim
