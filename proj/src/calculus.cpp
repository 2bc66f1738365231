#include "parq/calculus.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace parq::snc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* msg) {
    if (!ok) throw std::domain_error(msg);
}

}  // namespace

double rho_arrival_exp(double lambda, double theta) {
    require(lambda > 0.0, "rho_arrival_exp: lambda must be > 0");
    require(theta > 0.0, "rho_arrival_exp: theta must be > 0");
    // -(1/theta) ln(lambda / (lambda + theta)); log1p keeps small theta exact.
    return std::log1p(theta / lambda) / theta;
}

double rho_service_exp(double mu, double theta) {
    require(mu > 0.0, "rho_service_exp: mu must be > 0");
    require(theta > 0.0 && theta < mu, "rho_service_exp: theta outside MGF domain (0, mu)");
    return -std::log1p(-theta / mu) / theta;
}

double rho_residual_max(int l, double mu, double theta) {
    require(l >= 1, "rho_residual_max: l must be >= 1");
    require(mu > 0.0, "rho_residual_max: mu must be > 0");
    require(theta > 0.0 && theta < mu,
            "rho_residual_max: theta outside MGF domain (0, mu)");
    double sum = 0.0;
    for (int i = 1; i <= l; ++i) sum -= std::log1p(-theta / (i * mu));
    return sum / theta;
}

double rho_next_free(int l, double mu, double theta) {
    require(l >= 1, "rho_next_free: l must be >= 1");
    require(mu > 0.0, "rho_next_free: mu must be > 0");
    require(theta > 0.0 && theta < l * mu,
            "rho_next_free: theta outside MGF domain (0, l*mu)");
    return -std::log1p(-theta / (l * mu)) / theta;
}

Envelope add(const Envelope& a, const Envelope& b) {
    Envelope e;
    e.theta_max = std::min(a.theta_max, b.theta_max);
    e.label = a.label + "+" + b.label;
    e.rho = [fa = a.rho, fb = b.rho](double theta) { return fa(theta) + fb(theta); };
    return e;
}

Envelope scaled(const Envelope& e, double factor) {
    Envelope out;
    out.theta_max = e.theta_max;
    out.label = std::to_string(factor) + "*" + e.label;
    out.rho = [f = e.rho, factor](double theta) { return factor * f(theta); };
    return out;
}

Envelope shifted(const Envelope& e, double constant) {
    Envelope out;
    out.theta_max = e.theta_max;
    out.label = e.label + "+const";
    out.rho = [f = e.rho, constant](double theta) { return f(theta) + constant; };
    return out;
}

Envelope arrival_exp_envelope(double lambda) {
    require(lambda > 0.0, "arrival envelope: lambda must be > 0");
    Envelope e;
    e.theta_max = kInf;
    e.label = "arrival-exp";
    e.rho = [lambda](double theta) { return rho_arrival_exp(lambda, theta); };
    return e;
}

Envelope service_exp_envelope(double mu) {
    require(mu > 0.0, "service envelope: mu must be > 0");
    Envelope e;
    e.theta_max = mu;
    e.label = "service-exp";
    e.rho = [mu](double theta) { return rho_service_exp(mu, theta); };
    return e;
}

Envelope ideal_partition_envelope(int l, int k, double mu) {
    require(l >= 1 && k >= 1, "ideal partition: l, k must be >= 1");
    require(mu > 0.0, "ideal partition: mu must be > 0");
    Envelope e;
    e.theta_max = l * mu;
    e.label = "ideal-partition";
    e.rho = [l, k, mu](double theta) {
        return -static_cast<double>(k) * std::log1p(-theta / (l * mu)) / theta;
    };
    return e;
}

Envelope split_merge_envelope(int l, int k, double mu) {
    require(l >= 1, "split-merge envelope: l must be >= 1");
    require(k >= l, "split-merge envelope: k must be >= l");
    require(mu > 0.0, "split-merge envelope: mu must be > 0");
    Envelope e;
    e.theta_max = mu;
    e.label = "split-merge";
    e.rho = [l, k, mu](double theta) {
        double v = rho_residual_max(l, mu, theta);
        if (k > l) v += (k - l) * rho_next_free(l, mu, theta);
        return v;
    };
    return e;
}

double split_merge_mean_job_service(int l, int k, double mu) {
    require(l >= 1, "mean job service: l must be >= 1");
    require(k >= l, "mean job service: k must be >= l");
    require(mu > 0.0, "mean job service: mu must be > 0");
    double harmonic_tail = 0.0;
    for (int i = 2; i <= l; ++i) harmonic_tail += 1.0 / i;
    return (static_cast<double>(k) / l + harmonic_tail) / mu;
}

double split_merge_max_utilization(int l, double kappa) {
    require(l >= 1, "max utilization: l must be >= 1");
    require(kappa >= 1.0, "max utilization: kappa must be >= 1");
    double harmonic_tail = 0.0;
    for (int i = 2; i <= l; ++i) harmonic_tail += 1.0 / i;
    return 1.0 / (1.0 + harmonic_tail / kappa);
}

// --- Erlang numerics -----------------------------------------------------

double erlang_cdf(int shape, double rate, double x) {
    require(shape >= 1, "erlang_cdf: shape must be >= 1");
    require(rate > 0.0, "erlang_cdf: rate must be > 0");
    if (x < 0.0) throw std::domain_error("erlang_cdf: x must be >= 0");
    double mx = rate * x;
    double term = std::exp(-mx);  // underflows to 0 for mx > ~745, where CDF ~ 1
    if (term == 0.0) return 1.0;
    double sum = term;
    for (int i = 1; i < shape; ++i) {
        term *= mx / i;
        sum += term;
    }
    return sum >= 1.0 ? 0.0 : 1.0 - sum;
}

namespace {

// log of sum_{i=0}^{shape-1} (mx)^i / i!, the polynomial factor of the
// Erlang survival function (log-sum-exp, overflow-free).
double erlang_log_poisson_partial(int shape, double mx) {
    if (mx <= 0.0) return 0.0;
    double lmx = std::log(mx);
    double max_term = 0.0, log_fact = 0.0;
    for (int i = 1; i < shape; ++i) {
        log_fact += std::log(static_cast<double>(i));
        max_term = std::max(max_term, i * lmx - log_fact);
    }
    double acc = 0.0;
    log_fact = 0.0;
    for (int i = 0; i < shape; ++i) {
        if (i > 0) log_fact += std::log(static_cast<double>(i));
        acc += std::exp(i * lmx - log_fact - max_term);
    }
    return max_term + std::log(acc);
}

// log of the Erlang survival function, stable deep in the tail.
double erlang_log_sf(int shape, double rate, double x) {
    double mx = rate * x;
    if (mx <= 0.0) return 0.0;
    return -mx + erlang_log_poisson_partial(shape, mx);
}

// log(1 - F(x)^l), stable across the whole range: no cancellation when F
// is close to 1 and no underflow cliff deep in the tail (the survival
// probability never leaves log space there).
double log_one_minus_cdf_pow(int l, int shape, double rate, double x) {
    double log_sf = erlang_log_sf(shape, rate, x);
    if (log_sf >= -1e-8) {
        double f = erlang_cdf(shape, rate, x);
        return std::log(1.0 - std::pow(f, l));
    }
    if (log_sf < -36.0) {
        // sf below ~2e-16: 1 - (1-sf)^l = l*sf up to O(l*sf) relative error
        return std::log(static_cast<double>(l)) + log_sf;
    }
    double sf = std::exp(log_sf);
    return std::log(-std::expm1(l * std::log1p(-sf)));
}

// 1 - F(x)^l; underflows gracefully to 0 where the value is below the
// double range.
double one_minus_cdf_pow(int l, int shape, double rate, double x) {
    return std::exp(log_one_minus_cdf_pow(l, shape, rate, x));
}

struct Quadrature {
    double value = 0.0;
    bool converged = true;
};

// Adaptive Simpson on [a, b]; f must be finite on the interval.
double adaptive_simpson(const std::function<double(double)>& f, double a, double fa,
                        double b, double fb, double m, double fm, double whole,
                        double eps, int depth, bool& converged) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * eps || (b - a) < 1e-300) return left + right + delta / 15.0;
    if (depth <= 0) {
        converged = false;
        return left + right;
    }
    return adaptive_simpson(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1, converged) +
           adaptive_simpson(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1, converged);
}

Quadrature integrate(const std::function<double(double)>& f, double a, double b,
                     double rel_tol) {
    double fa = f(a), fb = f(b);
    double m = 0.5 * (a + b), fm = f(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // one coarse pass to scale the absolute tolerance
    double scale = std::max(std::abs(whole), 1e-30);
    Quadrature q;
    q.value = adaptive_simpson(f, a, fa, b, fb, m, fm, whole, rel_tol * scale, 48,
                               q.converged);
    return q;
}

}  // namespace

double erlang_max_mean(int l, int shape, double rate) {
    require(l >= 1, "erlang_max_mean: l must be >= 1");
    require(shape >= 1, "erlang_max_mean: shape must be >= 1");
    require(rate > 0.0, "erlang_max_mean: rate must be > 0");

    auto integrand = [l, shape, rate](double x) {
        return one_minus_cdf_pow(l, shape, rate, x);
    };
    // Truncate where the per-worker survival no longer contributes.
    double upper = (shape + 8.0 * std::sqrt(static_cast<double>(shape))) / rate;
    for (int i = 0; i < 200; ++i) {
        if (l * std::exp(erlang_log_sf(shape, rate, upper)) < 1e-18) break;
        upper *= 2.0;
    }
    Quadrature q = integrate(integrand, 0.0, upper, 1e-12);
    if (!q.converged)
        throw std::runtime_error("erlang_max_mean: quadrature did not converge (l=" +
                                 std::to_string(l) + ", shape=" + std::to_string(shape) +
                                 ")");
    return q.value;
}

double erlang_max_mgf(int l, int shape, double rate, double theta) {
    require(l >= 1, "erlang_max_mgf: l must be >= 1");
    require(shape >= 1, "erlang_max_mgf: shape must be >= 1");
    require(rate > 0.0, "erlang_max_mgf: rate must be > 0");
    require(theta > 0.0 && theta < rate,
            "erlang_max_mgf: theta outside MGF domain (0, rate)");

    // E[e^{theta S}] = 1 + theta * int_0^inf e^{theta u} (1 - F(u)^l) du.
    // Evaluated in log space; a peak beyond the double range makes the
    // whole MGF +infinity. Deep in the tail the exponent is fused as
    // -(rate - theta) u + poly(u) + ln(l): forming theta*u and -rate*u
    // separately would cancel catastrophically when theta is close to
    // the rate and u is large.
    bool overflowed = false;
    const double decay = rate - theta;
    const double log_l = std::log(static_cast<double>(l));
    auto integrand = [l, shape, rate, theta, decay, log_l, &overflowed](double u) {
        double poly = erlang_log_poisson_partial(shape, rate * u);
        double log_sf = -rate * u + poly;
        double e;
        if (log_sf < -36.0)
            e = log_l - decay * u + poly;  // 1 - F^l = l * sf here
        else
            e = theta * u + log_one_minus_cdf_pow(l, shape, rate, u);
        if (e > 700.0) {
            overflowed = true;
            return 1e300;
        }
        return std::exp(e);
    };

    double upper = (shape + 8.0 * std::sqrt(static_cast<double>(shape))) / rate;
    bool truncated = false;
    for (int i = 0; i < 200; ++i) {
        double log_tail_bound = std::log(static_cast<double>(l)) +
                                erlang_log_sf(shape, rate, upper) + theta * upper;
        if (log_tail_bound < std::log(1e-14)) {
            truncated = true;
            break;
        }
        upper *= 2.0;
    }
    if (!truncated) return kInf;

    // Split where 1 - F^l finishes its transition. Beyond that the
    // integrand is a bare e^{-(rate-theta) u} times a slowly varying
    // factor; substituting w = (rate-theta)(u - split) normalizes the
    // decay scale, which for theta near the rate is many orders slower
    // than the transition width.
    double split = std::min(
        upper, (shape + 8.0 * std::sqrt(static_cast<double>(shape)) +
                std::log(static_cast<double>(l)) + 20.0) /
                   rate);
    Quadrature head = integrate(integrand, 0.0, split, 1e-10);
    double value = head.value;
    bool converged = head.converged;
    if (upper > split) {
        double width = decay * (upper - split);
        auto tail = [&](double w) { return integrand(split + w / decay) / decay; };
        Quadrature rest = integrate(tail, 0.0, width, 1e-10);
        value += rest.value;
        converged = converged && rest.converged;
    }
    if (overflowed || !std::isfinite(value)) return kInf;
    if (!converged)
        throw std::runtime_error("erlang_max_mgf: quadrature did not converge (l=" +
                                 std::to_string(l) + ", shape=" + std::to_string(shape) +
                                 ", theta=" + std::to_string(theta) + ")");
    return 1.0 + theta * value;
}

Envelope erlang_split_merge_envelope(int l, int shape, double mu) {
    require(l >= 1, "erlang split-merge envelope: l must be >= 1");
    require(shape >= 1, "erlang split-merge envelope: shape must be >= 1");
    require(mu > 0.0, "erlang split-merge envelope: mu must be > 0");
    Envelope e;
    e.theta_max = mu;
    e.label = "split-merge-erlang";
    e.rho = [l, shape, mu](double theta) {
        double mgf = erlang_max_mgf(l, shape, mu, theta);
        if (!std::isfinite(mgf)) return kInf;
        // ln(1 + I)/theta with I = mgf - 1, exact for small theta
        return std::log1p(mgf - 1.0) / theta;
    };
    return e;
}

double split_merge_max_utilization_erlang(int l, int shape) {
    return shape / erlang_max_mean(l, shape, 1.0);
}

// --- bound optimization ---------------------------------------------------

BoundResult optimize_bound(const Envelope& constraint, const Envelope& arrival,
                           const std::function<double(double)>& prefix,
                           double prefix_theta_max, double epsilon) {
    require(epsilon > 0.0 && epsilon <= 1.0, "bound: epsilon must be in (0, 1]");
    BoundResult r;
    r.epsilon = epsilon;

    double cap = std::min(constraint.theta_max, prefix_theta_max);
    if (std::isfinite(cap)) cap *= 1.0 - 1e-9;
    else cap = 1e12;

    auto slack = [&](double theta) { return arrival(theta) - constraint(theta); };

    double lo = cap * 1e-12;
    if (!(slack(lo) > 0.0)) return r;  // unstable per the bound's condition

    double theta_feas;
    if (slack(cap) >= 0.0) {
        theta_feas = cap;
    } else {
        double hi = cap;
        for (int it = 0; it < 200 && (hi - lo) > 1e-10 * hi; ++it) {
            double mid = 0.5 * (lo + hi);
            if (slack(mid) >= 0.0)
                lo = mid;
            else
                hi = mid;
        }
        theta_feas = lo;
    }

    double neg_log_eps = -std::log(epsilon);
    auto objective = [&](double theta) { return prefix(theta) + neg_log_eps / theta; };

    // Golden-section search; the objective is unimodal on (0, theta_feas].
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = cap * 1e-12, b = theta_feas;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-10 * b; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = objective(x2);
        }
    }
    double theta_star = 0.5 * (a + b);
    double tau = objective(theta_star);
    // The boundary point is optimal for monotone objectives (e.g. waiting).
    double tau_edge = objective(theta_feas);
    if (tau_edge <= tau) {
        theta_star = theta_feas;
        tau = tau_edge;
    }

    r.feasible = true;
    r.theta_star = theta_star;
    r.tau = tau;
    return r;
}

namespace {
std::function<double(double)> zero_prefix() {
    return [](double) { return 0.0; };
}
}  // namespace

BoundResult single_server_bound(const Envelope& service, const Envelope& arrival,
                                double epsilon, Metric metric) {
    if (metric == Metric::Waiting)
        return optimize_bound(service, arrival, zero_prefix(), service.theta_max, epsilon);
    return optimize_bound(service, arrival, service.rho, service.theta_max, epsilon);
}

BoundResult fork_join_conventional_bound(int l, double lambda, double mu,
                                         double epsilon, Metric metric) {
    require(l >= 1, "fork-join bound: l must be >= 1");
    Envelope per_server = service_exp_envelope(mu);
    Envelope arrival = arrival_exp_envelope(lambda);
    double log_l = std::log(static_cast<double>(l));
    std::function<double(double)> prefix;
    if (metric == Metric::Waiting)
        prefix = [log_l](double theta) { return log_l / theta; };
    else
        prefix = [rho = per_server.rho, log_l](double theta) {
            return rho(theta) + log_l / theta;
        };
    return optimize_bound(per_server, arrival, prefix, per_server.theta_max, epsilon);
}

std::pair<Envelope, Envelope> overhead_adjusted_envelopes(int l, double mu,
                                                          double task_overhead_mean) {
    Envelope drain;
    drain.theta_max = mu;
    drain.label = "drain";
    drain.rho = [l, mu, task_overhead_mean](double theta) {
        return task_overhead_mean + rho_residual_max(l, mu, theta);
    };
    Envelope gap;
    gap.theta_max = l * mu;
    gap.label = "gap";
    gap.rho = [l, mu, task_overhead_mean](double theta) {
        return task_overhead_mean / l + rho_next_free(l, mu, theta);
    };
    return {drain, gap};
}

BoundResult sq_fork_join_overhead_approx(int l, int k, double lambda, double mu,
                                         const OverheadTerms& overhead, double epsilon,
                                         Metric metric, int task_index) {
    require(l >= 1, "fork-join bound: l must be >= 1");
    require(k >= l, "fork-join bound: k must be >= l");
    if (task_index == 0) task_index = k;
    require(task_index >= 1 && task_index <= k,
            "fork-join bound: task index must be in [1, k]");

    auto [drain, gap] = overhead_adjusted_envelopes(l, mu, overhead.task_mean);
    Envelope arrival = arrival_exp_envelope(lambda);
    Envelope constraint = scaled(gap, static_cast<double>(k));
    constraint.theta_max = mu;  // bound valid on (0, mu); the gap term alone allows more

    std::function<double(double)> prefix;
    if (metric == Metric::Waiting) {
        double weight = task_index - 1;
        prefix = [g = gap.rho, weight](double theta) { return weight * g(theta); };
    } else {
        double weight = k - 1;
        prefix = [g = gap.rho, d = drain.rho, weight](double theta) {
            return weight * g(theta) + d(theta);
        };
    }
    BoundResult r = optimize_bound(constraint, arrival, prefix, mu, epsilon);
    if (r.feasible && metric == Metric::Sojourn)
        r.tau += overhead.pre_job + k * overhead.pre_task;
    return r;
}

BoundResult sq_fork_join_bound(int l, int k, double lambda, double mu, double epsilon,
                               Metric metric, int task_index) {
    return sq_fork_join_overhead_approx(l, k, lambda, mu, OverheadTerms{}, epsilon,
                                        metric, task_index);
}

BoundResult split_merge_overhead_approx(int l, int k, double lambda, double mu,
                                        const OverheadTerms& overhead, double epsilon,
                                        Metric metric) {
    require(l >= 1, "split-merge bound: l must be >= 1");
    require(k >= l, "split-merge bound: k must be >= l");
    auto [drain, gap] = overhead_adjusted_envelopes(l, mu, overhead.task_mean);
    // Pre-departure overhead blocks the next job, so it lives in the
    // drain term rather than being added to the quantile afterwards.
    double blocking = overhead.pre_job + k * overhead.pre_task;
    Envelope service;
    service.theta_max = mu;
    service.label = "split-merge-overhead";
    service.rho = [d = drain.rho, g = gap.rho, blocking, k, l](double theta) {
        double v = d(theta) + blocking;
        if (k > l) v += (k - l) * g(theta);
        return v;
    };
    return single_server_bound(service, arrival_exp_envelope(lambda), epsilon, metric);
}

BoundResult split_merge_bound(int l, int k, double lambda, double mu, double epsilon,
                              Metric metric) {
    return split_merge_overhead_approx(l, k, lambda, mu, OverheadTerms{}, epsilon,
                                       metric);
}

BoundResult ideal_partition_bound(int l, int k, double lambda, double mu,
                                  double epsilon, Metric metric) {
    return single_server_bound(ideal_partition_envelope(l, k, mu),
                               arrival_exp_envelope(lambda), epsilon, metric);
}

}  // namespace parq::snc
