#include "migsim/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace migsim {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::baseline: return "baseline";
        case Variant::proposed: return "proposed";
        case Variant::secdm3: return "secdm3";
        case Variant::secured2: return "secured2";
    }
    return "unknown";
}

Variant variant_from_string(const std::string& s) {
    if (s == "baseline") return Variant::baseline;
    if (s == "proposed") return Variant::proposed;
    if (s == "secdm3") return Variant::secdm3;
    if (s == "secured2") return Variant::secured2;
    throw std::invalid_argument("unknown variant: " + s);
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v = {Variant::baseline, Variant::proposed, Variant::secdm3,
                                           Variant::secured2};
    return v;
}

VariantShape shape_of(Variant v) {
    switch (v) {
        case Variant::baseline:
            // plain transfer: request/data/ack per block, no security work
            return {0, 0, 0, 0};
        case Variant::proposed:
            // one integrity hash over the payload; metadata exchange up front
            return {1, 0, 1, 1};
        case Variant::secdm3:
            // double hash plus a per-block ticket transfer
            return {2, 1, 1, 2};
        case Variant::secured2:
            // payload encrypted on the way out and decrypted on arrival
            return {2, 0, 1, 0};
    }
    return {};
}

namespace {

std::uint64_t block_count(std::uint64_t file_size, std::uint64_t block_size) {
    if (file_size == 0) return 1;
    return (file_size + block_size - 1) / block_size;
}

std::uint64_t messages_for(Variant v, std::uint64_t file_size, std::uint64_t block_size) {
    VariantShape shape = shape_of(v);
    return shape.setup_messages +
           block_count(file_size, block_size) * (3ull + shape.extra_messages_per_block);
}

SimTime serialization_ns(std::uint64_t bytes, std::uint64_t rate_bps) {
    unsigned __int128 bits_ns = static_cast<unsigned __int128>(bytes) * 8u * 1'000'000'000u;
    return static_cast<SimTime>(bits_ns / rate_bps);
}

}  // namespace

TimingTable load_timing_table(const std::string& csv_text) {
    TimingTable table;
    std::map<Variant, std::map<std::uint64_t, double>> cells;
    std::istringstream in(csv_text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("method", 0) == 0) continue;  // header
        }
        std::istringstream row(line);
        std::string method, size_s, time_s;
        if (!std::getline(row, method, ',') || !std::getline(row, size_s, ',') ||
            !std::getline(row, time_s, ',')) {
            throw CalibrationMissingError("bad timing table row: " + line);
        }
        Variant v = variant_from_string(method);
        cells[v][std::stoull(size_s)] = std::stod(time_s);
    }
    if (!cells.count(Variant::baseline))
        throw CalibrationMissingError("timing table has no baseline rows");

    for (const auto& [size, _] : cells[Variant::baseline]) table.sizes.push_back(size);
    std::sort(table.sizes.begin(), table.sizes.end());
    for (const auto& [v, by_size] : cells) {
        std::vector<double> times;
        for (std::uint64_t size : table.sizes) {
            auto it = by_size.find(size);
            if (it == by_size.end())
                throw CalibrationMissingError("timing table is ragged at size " +
                                              std::to_string(size));
            times.push_back(it->second);
        }
        table.times[v] = std::move(times);
    }
    return table;
}

TimingTable load_timing_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CalibrationMissingError("cannot open timing table: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_timing_table(buf.str());
}

CalibrationResult calibrate(const TimingTable& table, std::uint64_t block_size,
                            std::uint64_t rate_bps) {
    if (table.sizes.size() < 2) throw DegenerateFitError();

    CalibrationResult result;
    for (const auto& [v, times] : table.times) {
        VariantShape shape = shape_of(v);
        CostModel model;
        model.extra_messages_per_block = shape.extra_messages_per_block;
        model.hash_passes = shape.hash_passes;

        if (v != Variant::baseline) {
            // weighted least squares on the security overhead above pure
            // serialization; relative weighting, coefficients clamped at zero
            const std::size_t n = table.sizes.size();
            std::vector<double> a1(n), a2(n), y(n), w(n);
            for (std::size_t i = 0; i < n; ++i) {
                double S = static_cast<double>(table.sizes[i]);
                double ser = S * 8.0 / static_cast<double>(rate_bps);
                a1[i] = shape.work_passes > 0 ? static_cast<double>(shape.work_passes) * S : 0.0;
                a2[i] = static_cast<double>(messages_for(v, table.sizes[i], block_size));
                y[i] = times[i] - ser;
                w[i] = 1.0 / times[i];
            }

            auto sse = [&](double alpha, double beta) {
                double total = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double r = w[i] * (alpha * a1[i] + beta * a2[i] - y[i]);
                    total += r * r;
                }
                return total;
            };

            double s11 = 0, s12 = 0, s22 = 0, s1y = 0, s2y = 0;
            for (std::size_t i = 0; i < n; ++i) {
                double w2 = w[i] * w[i];
                s11 += w2 * a1[i] * a1[i];
                s12 += w2 * a1[i] * a2[i];
                s22 += w2 * a2[i] * a2[i];
                s1y += w2 * a1[i] * y[i];
                s2y += w2 * a2[i] * y[i];
            }

            double best_alpha = 0.0, best_beta = 0.0;
            double best = sse(0.0, 0.0);
            double det = s11 * s22 - s12 * s12;
            if (std::abs(det) > 1e-30) {
                double alpha = (s1y * s22 - s2y * s12) / det;
                double beta = (s2y * s11 - s1y * s12) / det;
                if (alpha >= 0.0 && beta >= 0.0 && sse(alpha, beta) < best) {
                    best = sse(alpha, beta);
                    best_alpha = alpha;
                    best_beta = beta;
                }
            }
            if (s11 > 0) {
                double alpha = std::max(0.0, s1y / s11);
                if (sse(alpha, 0.0) < best) {
                    best = sse(alpha, 0.0);
                    best_alpha = alpha;
                    best_beta = 0.0;
                }
            }
            if (s22 > 0) {
                double beta = std::max(0.0, s2y / s22);
                if (sse(0.0, beta) < best) {
                    best = sse(0.0, beta);
                    best_alpha = 0.0;
                    best_beta = beta;
                }
            }
            model.per_byte_crypto = best_alpha;
            model.per_message_handshake = best_beta;
        }

        BenchParams params{block_size, rate_bps};
        std::vector<double> residuals;
        for (std::size_t i = 0; i < table.sizes.size(); ++i) {
            double predicted = to_seconds(predict_migration_ns(v, table.sizes[i], model, params));
            residuals.push_back((predicted - times[i]) / times[i]);
        }
        result.models[v] = model;
        result.residuals[v] = std::move(residuals);
    }
    return result;
}

SimTime predict_migration_ns(Variant v, std::uint64_t file_size, const CostModel& cost,
                             const BenchParams& params) {
    VariantShape shape = shape_of(v);
    const std::uint64_t handshake_ns =
        static_cast<std::uint64_t>(std::llround(cost.per_message_handshake * 1e9));
    const std::uint64_t ps_per_byte =
        static_cast<std::uint64_t>(std::llround(cost.per_byte_crypto * 1e12));

    SimTime t = static_cast<SimTime>(shape.setup_messages * handshake_ns);
    std::uint64_t blocks = block_count(file_size, params.block_size);
    for (std::uint64_t i = 0; i < blocks; ++i) {
        std::uint64_t begin = i * params.block_size;
        std::uint64_t end = std::min(begin + params.block_size, file_size);
        std::uint64_t b = end > begin ? end - begin : 0;

        t += static_cast<SimTime>((3ull + shape.extra_messages_per_block) * handshake_ns);
        unsigned __int128 work_ps =
            static_cast<unsigned __int128>(b) * ps_per_byte * shape.work_passes;
        t += static_cast<SimTime>(work_ps / 1000u);
        t += serialization_ns(b, params.rate_bps);
    }
    return t;
}

namespace {

/// Sequential stop-and-wait transfer driven through the event queue. Control
/// messages ride with zero wire size (their cost is the fitted handshake
/// term); the data message carries the block's byte count.
class BenchRun {
public:
    BenchRun(Variant v, std::uint64_t file_size, const CostModel& cost, const BenchParams& params)
        : shape_(shape_of(v)),
          file_size_(file_size),
          params_(params),
          rng_(1),
          net_(rng_),
          handshake_ns_(static_cast<std::uint64_t>(std::llround(cost.per_message_handshake * 1e9))),
          ps_per_byte_(static_cast<std::uint64_t>(std::llround(cost.per_byte_crypto * 1e12))) {
        net_.add_link("tgt", "src", LinkModel{params.rate_bps, 0, 0.0, 0.0});
        blocks_ = block_count(file_size, params.block_size);
    }

    SimTime run() {
        // session setup messages, one handshake each
        schedule_delay(static_cast<SimTime>(shape_.setup_messages * handshake_ns_), kPhaseRequest);
        while (auto ev = net_.step()) {
            if (ev->timer) {
                on_phase(static_cast<Phase>(ev->timer->kind));
            } else {
                on_delivery(ev->delivery->dst);
            }
        }
        return net_.now();
    }

private:
    enum Phase : std::uint64_t {
        kPhaseRequest = 1,   // request handshake done -> extras or data
        kPhaseExtra,         // one extra per-block message done
        kPhaseWork,          // security work done -> transmit block
        kPhaseAckDone,       // ack handshake done -> next block
    };

    void schedule_delay(SimTime delay, Phase next) {
        net_.schedule_timer("src", next, 0, 0, net_.now() + delay);
    }

    std::uint64_t current_block_bytes() const {
        std::uint64_t begin = block_ * params_.block_size;
        std::uint64_t end = std::min(begin + params_.block_size, file_size_);
        return end > begin ? end - begin : 0;
    }

    void on_phase(Phase p) {
        switch (p) {
            case kPhaseRequest:
                if (block_ >= blocks_) return;
                extras_left_ = shape_.extra_messages_per_block;
                schedule_delay(static_cast<SimTime>(handshake_ns_), kPhaseExtra);
                break;
            case kPhaseExtra:
                if (extras_left_ > 0) {
                    --extras_left_;
                    schedule_delay(static_cast<SimTime>(handshake_ns_), kPhaseExtra);
                    break;
                }
                {
                    // data message handshake plus the per-byte security work
                    unsigned __int128 work_ps = static_cast<unsigned __int128>(
                                                    current_block_bytes()) *
                                                ps_per_byte_ * shape_.work_passes;
                    schedule_delay(static_cast<SimTime>(handshake_ns_ + work_ps / 1000u),
                                   kPhaseWork);
                }
                break;
            case kPhaseWork:
                net_.send("src", "tgt", {}, current_block_bytes());
                break;
            case kPhaseAckDone:
                ++block_;
                schedule_delay(0, kPhaseRequest);
                break;
        }
    }

    void on_delivery(const NodeAddress& dst) {
        if (dst == "tgt") {
            // block arrived; ack handshake then hand control back
            schedule_delay(static_cast<SimTime>(handshake_ns_), kPhaseAckDone);
        }
    }

    VariantShape shape_;
    std::uint64_t file_size_;
    BenchParams params_;
    DetRng rng_;
    Network net_;
    std::uint64_t handshake_ns_;
    std::uint64_t ps_per_byte_;
    std::uint64_t blocks_ = 0;
    std::uint64_t block_ = 0;
    std::uint32_t extras_left_ = 0;
};

}  // namespace

BenchRecord run_variant(Variant v, std::uint64_t file_size, const CostModel& cost,
                        const BenchParams& params) {
    BenchRun run(v, file_size, cost, params);
    SimTime total = run.run();
    return BenchRecord{to_string(v), file_size, to_seconds(total)};
}

std::vector<BenchRecord> run_bench(const std::vector<Variant>& variants,
                                   const std::vector<std::uint64_t>& sizes,
                                   const CalibrationResult& calibration,
                                   const BenchParams& params) {
    std::vector<BenchRecord> records;
    for (Variant v : variants) {
        auto it = calibration.models.find(v);
        if (it == calibration.models.end())
            throw CalibrationMissingError(std::string("no cost model for variant ") +
                                          to_string(v));
        std::vector<std::uint64_t> sorted = sizes;
        std::sort(sorted.begin(), sorted.end());
        for (std::uint64_t size : sorted) {
            records.push_back(run_variant(v, size, it->second, params));
        }
    }
    return records;
}

}  // namespace migsim
