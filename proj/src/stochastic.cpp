#include "parq/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace parq {

double RngStream::next_exponential(double rate_per_ms) {
    // u in [0,1) so 1-u in (0,1]; log is finite.
    return -std::log1p(-next_unit()) / rate_per_ms;
}

std::uint64_t stream_id(std::uint64_t kind, std::uint64_t job, std::uint64_t task) {
    return mix64(kind * 0x165667b19e3779f9ULL ^ job * 0xc2b2ae3d27d4eb4fULL ^
                 task * 0x8ebc6af09c88c6e3ULL);
}

Distribution Distribution::exponential(double rate_per_s) {
    if (!(rate_per_s > 0.0))
        throw std::invalid_argument("exponential: rate must be > 0");
    Distribution d;
    d.kind_ = DistKind::Exponential;
    d.rate_per_s_ = rate_per_s;
    return d;
}

Distribution Distribution::erlang(int shape, double rate_per_s) {
    if (shape < 1) throw std::invalid_argument("erlang: shape must be >= 1");
    if (!(rate_per_s > 0.0)) throw std::invalid_argument("erlang: rate must be > 0");
    Distribution d;
    d.kind_ = DistKind::Erlang;
    d.shape_ = shape;
    d.rate_per_s_ = rate_per_s;
    return d;
}

Distribution Distribution::deterministic(double value_ms) {
    if (!(value_ms >= 0.0))
        throw std::invalid_argument("deterministic: value must be >= 0");
    Distribution d;
    d.kind_ = DistKind::Deterministic;
    d.value_ms_ = value_ms;
    return d;
}

Distribution Distribution::shifted_exponential(double shift_ms, double rate_per_s) {
    if (!(shift_ms >= 0.0))
        throw std::invalid_argument("shifted_exponential: shift must be >= 0");
    if (!(rate_per_s > 0.0))
        throw std::invalid_argument("shifted_exponential: rate must be > 0");
    Distribution d;
    d.kind_ = DistKind::ShiftedExponential;
    d.shift_ms_ = shift_ms;
    d.rate_per_s_ = rate_per_s;
    return d;
}

namespace {

std::vector<std::string> split_fields(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = text.find(':', pos);
        if (next == std::string::npos) {
            out.push_back(text.substr(pos));
            return out;
        }
        out.push_back(text.substr(pos, next - pos));
        pos = next + 1;
    }
}

double parse_number(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("distribution: bad ") + what + " '" + s + "'");
    }
}

}  // namespace

Distribution Distribution::parse(const std::string& text) {
    auto f = split_fields(text);
    if (f[0] == "exp" && f.size() == 2)
        return exponential(parse_number(f[1], "rate"));
    if (f[0] == "erlang" && f.size() == 3) {
        double shape = parse_number(f[1], "shape");
        if (shape != std::floor(shape))
            throw std::invalid_argument("erlang: shape must be an integer");
        return erlang(static_cast<int>(shape), parse_number(f[2], "rate"));
    }
    if (f[0] == "det" && f.size() == 2)
        return deterministic(parse_number(f[1], "value"));
    if (f[0] == "sexp" && f.size() == 3)
        return shifted_exponential(parse_number(f[1], "shift"),
                                   parse_number(f[2], "rate"));
    throw std::invalid_argument(
        "distribution: expected exp:<rate>, erlang:<shape>:<rate>, det:<ms> or "
        "sexp:<ms>:<rate>, got '" + text + "'");
}

double Distribution::mean_ms() const {
    switch (kind_) {
        case DistKind::Exponential: return 1000.0 / rate_per_s_;
        case DistKind::Erlang: return 1000.0 * shape_ / rate_per_s_;
        case DistKind::Deterministic: return value_ms_;
        case DistKind::ShiftedExponential: return shift_ms_ + 1000.0 / rate_per_s_;
    }
    return 0.0;
}

double Distribution::sample_ms(RngStream& rng) const {
    switch (kind_) {
        case DistKind::Exponential:
            return rng.next_exponential(rate_per_s_ / 1000.0);
        case DistKind::Erlang: {
            double sum = 0.0;
            for (int i = 0; i < shape_; ++i)
                sum += rng.next_exponential(rate_per_s_ / 1000.0);
            return sum;
        }
        case DistKind::Deterministic:
            return value_ms_;
        case DistKind::ShiftedExponential:
            return shift_ms_ + rng.next_exponential(rate_per_s_ / 1000.0);
    }
    return 0.0;
}

namespace {
std::string format_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}
}  // namespace

std::string Distribution::to_string() const {
    switch (kind_) {
        case DistKind::Exponential: return "exp:" + format_num(rate_per_s_);
        case DistKind::Erlang:
            return "erlang:" + std::to_string(shape_) + ":" + format_num(rate_per_s_);
        case DistKind::Deterministic: return "det:" + format_num(value_ms_);
        case DistKind::ShiftedExponential:
            return "sexp:" + format_num(shift_ms_) + ":" + format_num(rate_per_s_);
    }
    return "";
}

EmpiricalSample::EmpiricalSample(std::vector<double> values)
    : values_(std::move(values)), sorted_(false) {
    finalize();
}

void EmpiricalSample::finalize() {
    std::sort(values_.begin(), values_.end());
    sorted_ = true;
}

void EmpiricalSample::require_sorted() const {
    if (values_.empty()) throw std::invalid_argument("empty sample");
    if (!sorted_) throw std::logic_error("sample not finalized");
}

double EmpiricalSample::quantile(double q) const {
    require_sorted();
    if (!(q > 0.0 && q <= 1.0))
        throw std::invalid_argument("quantile: q must be in (0, 1]");
    std::size_t idx = static_cast<std::size_t>(std::ceil(q * values_.size()));
    if (idx < 1) idx = 1;
    if (idx > values_.size()) idx = values_.size();
    return values_[idx - 1];
}

double EmpiricalSample::min() const {
    require_sorted();
    return values_.front();
}

double EmpiricalSample::max() const {
    require_sorted();
    return values_.back();
}

double EmpiricalSample::mean() const {
    if (values_.empty()) throw std::invalid_argument("empty sample");
    double sum = 0.0;
    for (double v : values_) sum += v;
    return sum / values_.size();
}

double EmpiricalSample::cdf(double t) const {
    require_sorted();
    auto it = std::upper_bound(values_.begin(), values_.end(), t);
    return static_cast<double>(it - values_.begin()) / values_.size();
}

void EmpiricalSample::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "value_ms\n";
    char buf[40];
    for (double v : values_) {
        std::snprintf(buf, sizeof(buf), "%.12g\n", v);
        out << buf;
    }
}

BoxplotSummary boxplot_summary(const EmpiricalSample& s) {
    BoxplotSummary b;
    b.min = s.min();
    b.q25 = s.quantile(0.25);
    b.median = s.quantile(0.5);
    b.q75 = s.quantile(0.75);
    b.max = s.max();
    b.mean = s.mean();
    return b;
}

std::vector<std::pair<double, double>> pp_plot(const EmpiricalSample& a,
                                               const EmpiricalSample& b,
                                               int grid_size) {
    if (a.empty() || b.empty()) throw std::invalid_argument("empty sample");
    if (grid_size < 2) throw std::invalid_argument("pp_plot: grid_size must be >= 2");

    std::vector<double> pooled;
    pooled.reserve(a.count() + b.count());
    pooled.insert(pooled.end(), a.values().begin(), a.values().end());
    pooled.insert(pooled.end(), b.values().begin(), b.values().end());
    EmpiricalSample pool(std::move(pooled));

    std::vector<std::pair<double, double>> points;
    points.reserve(grid_size);
    for (int j = 1; j <= grid_size; ++j) {
        double t = pool.quantile(static_cast<double>(j) / grid_size);
        points.emplace_back(a.cdf(t), b.cdf(t));
    }
    return points;
}

}  // namespace parq
