#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "migsim/metrics.hpp"
#include "migsim/netsim.hpp"

namespace migsim {

class DegenerateFitError : public std::runtime_error {
public:
    DegenerateFitError() : std::runtime_error("calibration needs at least 2 file sizes") {}
};
class CalibrationMissingError : public std::runtime_error {
public:
    explicit CalibrationMissingError(const std::string& what) : std::runtime_error(what) {}
};

enum class Variant { baseline, proposed, secdm3, secured2 };
const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);  // throws std::invalid_argument
/// Canonical report order: baseline, proposed, secdm3, secured2.
const std::vector<Variant>& all_variants();

/// Security cost knobs per method. The plain transfer has all zeros; the
/// secured methods are modeled as deltas on top of the same block loop.
struct CostModel {
    double per_byte_crypto = 0.0;        // seconds per byte, per work pass
    double per_message_handshake = 0.0;  // seconds per control message
    std::uint32_t extra_messages_per_block = 0;
    std::uint32_t hash_passes = 0;
};

/// Structural shape of each variant's transfer loop (fixed, not fitted).
struct VariantShape {
    std::uint32_t work_passes = 0;       // per-byte work multiplier
    std::uint32_t extra_messages_per_block = 0;
    std::uint32_t setup_messages = 0;
    std::uint32_t hash_passes = 0;
};
VariantShape shape_of(Variant v);

/// Reference bench timing data: migration seconds per (variant, file size).
struct TimingTable {
    std::vector<std::uint64_t> sizes;
    std::map<Variant, std::vector<double>> times;
};
TimingTable load_timing_table(const std::string& csv_text);       // throws on bad input
TimingTable load_timing_table_file(const std::string& path);      // throws CalibrationMissingError

struct CalibrationResult {
    std::map<Variant, CostModel> models;
    /// Relative residuals (model - reference) / reference per size, in the
    /// table's size order.
    std::map<Variant, std::vector<double>> residuals;
};

/// Weighted least-squares fit of (per_byte_crypto, per_message_handshake)
/// per variant, both clamped non-negative. The plain variant is the
/// reference environment and keeps a zero cost model. Throws
/// DegenerateFitError when the table has fewer than 2 sizes.
CalibrationResult calibrate(const TimingTable& table, std::uint64_t block_size,
                            std::uint64_t rate_bps);

struct BenchParams {
    std::uint64_t block_size = 64ull * 1024 * 1024;
    std::uint64_t rate_bps = 64'000'000;
};

/// Closed-form simulated migration duration for a variant; integer
/// nanoseconds, exactly what the event-driven run produces.
SimTime predict_migration_ns(Variant v, std::uint64_t file_size, const CostModel& cost,
                             const BenchParams& params);

/// Runs the variant's block-transfer loop through the discrete-event queue
/// and returns the measured record.
BenchRecord run_variant(Variant v, std::uint64_t file_size, const CostModel& cost,
                        const BenchParams& params);

/// Table-shaped bench sweep: every variant at every size, canonical order.
std::vector<BenchRecord> run_bench(const std::vector<Variant>& variants,
                                   const std::vector<std::uint64_t>& sizes,
                                   const CalibrationResult& calibration,
                                   const BenchParams& params);

}  // namespace migsim
