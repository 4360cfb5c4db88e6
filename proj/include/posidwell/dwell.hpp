#pragma once

#include <optional>
#include <utility>

#include "posidwell/certificate.hpp"
#include "posidwell/lift.hpp"
#include "posidwell/system.hpp"

namespace posidwell {

/// Stability under every impulse sequence. Primal checks the row
/// conditions, Dual the column conditions. With persistent_flow the jump
/// condition is relaxed from strict decrease to non-increase.
CheckResult check_arbitrary(const SystemSpec& s, Variant variant = Variant::Primal,
                            bool persistent_flow = false);

CheckResult check_constant(const SystemSpec& s, double T,
                           const Backend& backend = Backend::exact(),
                           Statement statement = Statement::Zeta,
                           std::optional<Variant> variant = std::nullopt);

CheckResult check_minimum(const SystemSpec& s, double T,
                          const Backend& backend = Backend::exact(),
                          Statement statement = Statement::Zeta,
                          std::optional<Variant> variant = std::nullopt);

CheckResult check_maximum(const SystemSpec& s, double T,
                          const Backend& backend = Backend::exact(),
                          Statement statement = Statement::Zeta,
                          std::optional<Variant> variant = std::nullopt);

CheckResult check_range(const SystemSpec& s, double T_min, double T_max,
                        const Backend& backend = Backend::grid(),
                        Statement statement = Statement::Zeta,
                        std::optional<Variant> variant = std::nullopt);

/// Threshold search result. The bracketing check results are kept when the
/// corresponding side of the final bracket exists.
struct EstimateResult {
    double threshold = 0.0;  // +infinity when the maximum dwell is unbounded
    std::optional<CheckResult> feasible_side;
    std::optional<CheckResult> infeasible_side;
    int solves = 0;
};

/// Bisects the stability threshold of the minimum or maximum dwell regime
/// to absolute tolerance tol, bracketing geometrically from dwell 1.
/// Throws no_finite_threshold when no crossing exists in the search range
/// and parameter_error for regimes without a scalar threshold.
EstimateResult estimate_bound(const SystemSpec& s, RegimeKind kind, double tol = 1e-4,
                              const Backend& backend = Backend::exact(),
                              Statement statement = Statement::Zeta,
                              std::optional<Variant> variant = std::nullopt);

/// Admissible dwell windows for the range regime: the spectral window where
/// the one-period map is Schur, and a certified window where one common
/// vector certificate covers a grid over the whole window.
struct RangeEstimate {
    std::optional<std::pair<double, double>> spectral;
    std::optional<std::pair<double, double>> certified;
    int solves = 0;
};

RangeEstimate estimate_range(const SystemSpec& s, double tol = 1e-4, int points = 201,
                             std::optional<Variant> variant = std::nullopt);

/// Largest T_max such that the gridded range check on [T_min, T_max]
/// stays feasible, to absolute tolerance tol.
double estimate_range_max(const SystemSpec& s, double T_min, int points = 201, double tol = 1e-4,
                          std::optional<Variant> variant = std::nullopt);

} // namespace posidwell
