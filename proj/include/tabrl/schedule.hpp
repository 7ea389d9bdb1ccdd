#pragma once

// Learning-rate rules and the compounded weight each past update carries
// in the current iterate.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tabrl {

enum class ScheduleKind { rescaled_linear, constant, polynomial, linear };

inline std::string to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::rescaled_linear: return "rescaled_linear";
        case ScheduleKind::constant: return "constant";
        case ScheduleKind::polynomial: return "polynomial";
        case ScheduleKind::linear: return "linear";
    }
    return "?";
}

/// A step-size rule eta_t. Kinds and parameters:
///   rescaled_linear: eta_t = 1 / (1 + c (1-gamma) t / (log T)^k), log natural
///                    and floored at 1; requires c > 0, k >= 0, horizon_T >= 2.
///   constant:        eta_t = eta, eta in (0,1].
///   polynomial:      eta_t = t^-omega (eta_0 = 1), omega in (0,1).
///   linear:          eta_t = 1/t (eta_0 = 1).
struct Schedule {
    ScheduleKind kind = ScheduleKind::rescaled_linear;
    double c = 1.0;
    int log_exponent = 3;
    long long horizon_T = 0;
    double gamma = 0.0;
    double eta = 1.0;
    double omega = 0.5;

    static Schedule rescaled_linear(double gamma, long long horizon_T, double c = 1.0,
                                    int log_exponent = 3) {
        Schedule s;
        s.kind = ScheduleKind::rescaled_linear;
        s.gamma = gamma;
        s.horizon_T = horizon_T;
        s.c = c;
        s.log_exponent = log_exponent;
        return s;
    }
    static Schedule constant_rate(double eta) {
        Schedule s;
        s.kind = ScheduleKind::constant;
        s.eta = eta;
        return s;
    }
    static Schedule polynomial_rate(double omega) {
        Schedule s;
        s.kind = ScheduleKind::polynomial;
        s.omega = omega;
        return s;
    }
    static Schedule linear_rate() {
        Schedule s;
        s.kind = ScheduleKind::linear;
        return s;
    }

    void validate() const {
        switch (kind) {
            case ScheduleKind::rescaled_linear:
                if (!(c > 0.0)) throw std::invalid_argument("schedule: c must be > 0");
                if (log_exponent < 0) throw std::invalid_argument("schedule: log_exponent < 0");
                if (horizon_T < 2) throw std::invalid_argument("schedule: horizon_T must be >= 2");
                if (!(gamma >= 0.0 && gamma < 1.0))
                    throw std::invalid_argument("schedule: gamma not in [0,1)");
                break;
            case ScheduleKind::constant:
                if (!(eta > 0.0 && eta <= 1.0))
                    throw std::invalid_argument("schedule: eta not in (0,1]");
                break;
            case ScheduleKind::polynomial:
                if (!(omega > 0.0 && omega < 1.0))
                    throw std::invalid_argument("schedule: omega not in (0,1)");
                break;
            case ScheduleKind::linear: break;
        }
    }

    /// Fills the contextual fields of a rescaled-linear rule: the discount
    /// (or 1 - 1/H for finite horizons) and the run length. Config files
    /// omit these; they come from the instance and the run.
    Schedule with_context(double gamma_, long long horizon) const {
        Schedule s = *this;
        if (s.kind == ScheduleKind::rescaled_linear) {
            s.gamma = gamma_;
            s.horizon_T = horizon;
        }
        return s;
    }

    /// eta_t for t >= 0; always in (0,1].
    double rate(long long t) const {
        validate();
        if (t < 0) throw std::invalid_argument("schedule: t must be >= 0");
        switch (kind) {
            case ScheduleKind::rescaled_linear: {
                const double logT = std::max(std::log(static_cast<double>(horizon_T)), 1.0);
                const double denom_scale = std::pow(logT, log_exponent);
                return 1.0 / (1.0 + c * (1.0 - gamma) * static_cast<double>(t) / denom_scale);
            }
            case ScheduleKind::constant: return eta;
            case ScheduleKind::polynomial:
                return t == 0 ? 1.0 : std::pow(static_cast<double>(t), -omega);
            case ScheduleKind::linear: return t == 0 ? 1.0 : 1.0 / static_cast<double>(t);
        }
        return 1.0;
    }
};

/// Weights {w_i}_{i=0..t} carried by each update in the t-th iterate:
///   w_0 = prod_{j=1..t}(1-eta_j),  w_i = eta_i prod_{j=i+1..t}(1-eta_j),
///   w_t = eta_t. Computed by one backward pass; the weights sum to one.
inline std::vector<double> compounded_weights(const Schedule& schedule, long long t) {
    if (t < 1) throw std::invalid_argument("compounded_weights: t must be >= 1");
    std::vector<double> w(static_cast<size_t>(t) + 1);
    double suffix = 1.0;
    for (long long i = t; i >= 1; --i) {
        const double eta_i = schedule.rate(i);
        w[static_cast<size_t>(i)] = eta_i * suffix;
        suffix *= (1.0 - eta_i);
    }
    w[0] = suffix;
    return w;
}

} // namespace tabrl
