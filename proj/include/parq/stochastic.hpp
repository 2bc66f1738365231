// Random-variate generation and empirical statistics shared by the
// simulator and the bound calculator. All durations are milliseconds,
// all rates are per second at the interface (converted internally).
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace parq {

// splitmix64 finalizer; full-avalanche 64-bit mixer.
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based generator. Streams keyed by (seed, stream_id) are
// independent and reproducible regardless of interleaving, so draws can
// be attached to (job, task) indices instead of simulation event order.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : base_(mix64(seed ^ mix64(stream_id))), n_(0) {}

    std::uint64_t next_u64() { return mix64(base_ + ++n_ * kGolden); }

    // uniform in [0, 1)
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // rate in 1/ms
    double next_exponential(double rate_per_ms);

private:
    std::uint64_t base_;
    std::uint64_t n_;
};

// Stream ids for the simulator's draw kinds.
std::uint64_t stream_id(std::uint64_t kind, std::uint64_t job, std::uint64_t task);

enum class DistKind { Exponential, Erlang, Deterministic, ShiftedExponential };

class Distribution {
public:
    static Distribution exponential(double rate_per_s);
    static Distribution erlang(int shape, double rate_per_s);
    static Distribution deterministic(double value_ms);
    static Distribution shifted_exponential(double shift_ms, double rate_per_s);

    // Flag grammar: exp:<rate>, erlang:<shape>:<rate>, det:<ms>, sexp:<ms>:<rate>
    static Distribution parse(const std::string& text);

    DistKind kind() const { return kind_; }
    double rate_per_s() const { return rate_per_s_; }
    int shape() const { return shape_; }
    double value_ms() const { return value_ms_; }
    double shift_ms() const { return shift_ms_; }

    double mean_ms() const;
    double sample_ms(RngStream& rng) const;
    std::string to_string() const;

private:
    Distribution() = default;
    DistKind kind_ = DistKind::Deterministic;
    double rate_per_s_ = 0.0;
    int shape_ = 1;
    double value_ms_ = 0.0;
    double shift_ms_ = 0.0;
};

// Sorted sample of durations. add() then finalize() before queries.
class EmpiricalSample {
public:
    EmpiricalSample() = default;
    explicit EmpiricalSample(std::vector<double> values);

    void add(double v_ms) { values_.push_back(v_ms); sorted_ = false; }
    void finalize();

    std::size_t count() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    const std::vector<double>& values() const { return values_; }

    // Inverse-CDF order statistic at ceil(q * count), 1-based. 0 < q <= 1.
    double quantile(double q) const;
    double min() const;
    double max() const;
    double mean() const;

    // Empirical CDF, right-continuous.
    double cdf(double t) const;

    void write_csv(const std::string& path) const;  // header: value_ms

private:
    void require_sorted() const;
    std::vector<double> values_;
    bool sorted_ = true;
};

struct BoxplotSummary {
    double min = 0, q25 = 0, median = 0, q75 = 0, max = 0, mean = 0;
};

BoxplotSummary boxplot_summary(const EmpiricalSample& s);

// Evaluates both empirical CDFs on a grid placed at quantiles of the
// pooled sample, so both tails get resolved. Returns (F_a, F_b) pairs,
// nondecreasing in both coordinates.
std::vector<std::pair<double, double>> pp_plot(const EmpiricalSample& a,
                                               const EmpiricalSample& b,
                                               int grid_size = 512);

}  // namespace parq
