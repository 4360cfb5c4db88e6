#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "posidwell/certificate.hpp"
#include "posidwell/dwell.hpp"
#include "posidwell/synth.hpp"
#include "posidwell/system.hpp"

namespace posidwell {

/// One mode of a switched plant: flow matrix and optional input matrix.
struct SwitchedMode {
    Matrix A;
    std::optional<Matrix> B;
};

/// Continuous-time switched positive plant dx/dt = A_sigma x + B_sigma u.
/// The state is continuous across switches. intervals optionally carries
/// one admissible dwell window per mode for the range regime; an upper
/// bound may be +infinity when that mode may be held indefinitely.
struct SwitchedSpec {
    std::vector<SwitchedMode> modes;
    std::vector<std::pair<double, double>> intervals;

    int N() const { return static_cast<int>(modes.size()); }
    int n() const { return modes.empty() ? 0 : modes.front().A.rows(); }
    int m() const {
        return modes.empty() || !modes.front().B ? 0 : modes.front().B->cols();
    }

    /// Throws dimension_error on mismatched shapes and parameter_error on
    /// bad dwell windows.
    void validate() const;
};

/// Impulsive embedding of a switched plant: the stacked state flows under
/// the block diagonal of all mode matrices, and a switch from mode j to
/// mode i relocates the active block through jump[i][j].
struct ImpulsiveLift {
    Matrix Abar;                            // Nn x Nn block diagonal
    std::vector<std::vector<Matrix>> jump;  // jump[i][j] has one identity block at (i, j)
};

ImpulsiveLift lift_to_impulsive(const SwitchedSpec& sw);

/// Stability under every switching signal: one positive vector works for
/// all modes at once. Primal checks the row conditions lambda' A_i < 0,
/// Dual the column conditions A_i lambda < 0.
CheckResult check_arbitrary_switching(const SwitchedSpec& sw, Variant variant = Variant::Primal);

/// Stability when every mode is held at least T. The exact backend solves
/// the per-mode vector conditions with the embedded one-dwell maps; the
/// handelman and pwl backends solve the clock certificate form, with
/// statement picking the decreasing (Zeta) or increasing (Xi) clock.
CheckResult check_min_dwell_switching(const SwitchedSpec& sw, double T,
                                      const Backend& backend = Backend::exact(),
                                      Statement statement = Statement::Zeta);

/// Stability when mode i is held for some length inside sw.intervals[i].
/// The grid backend samples each window; the handelman and pwl backends
/// solve the per-mode clock certificate form (finite windows only). A mode
/// with an infinite upper bound contributes its flow condition plus the
/// coupling rows at its lower bound.
CheckResult check_range_dwell_switching(const SwitchedSpec& sw,
                                        const Backend& backend = Backend::grid());

/// Bisects the smallest certified minimum dwell, as estimate_bound does
/// for impulsive systems.
EstimateResult estimate_min_dwell_switching(const SwitchedSpec& sw, double tol = 1e-4,
                                            const Backend& backend = Backend::exact(),
                                            Statement statement = Statement::Zeta);

/// Largest upper bound for the chosen mode's dwell window keeping the
/// gridded range check feasible, holding every other window fixed.
double estimate_switched_range_max(const SwitchedSpec& sw, int mode, int points = 201,
                                   double tol = 1e-4);

/// Per-mode controllers plus the diagonal certificate that produced them.
struct SwitchedSynthesisResult {
    std::vector<Controller> controllers;  // one per mode; empty when infeasible
    std::optional<Certificate> certificate;
    double margin = 0.0;
    int lp_rows = 0;
    int lp_cols = 0;
    double lp_seconds = 0.0;

    bool ok() const { return !controllers.empty(); }
};

/// Mode-dependent gain synthesis under arbitrary switching (constant
/// gains, optionally one common gain), a minimum dwell (clock gains held
/// beyond T), or per-mode dwell windows from sw.intervals (clock gains).
/// Timed regimes need the handelman backend; constant and maximum dwell
/// switching are not supported.
SwitchedSynthesisResult synth_switching(const SwitchedSpec& sw, const DwellRegime& regime,
                                        const Backend& backend = Backend::handelman(1),
                                        bool common_gain = false);

/// Closed-loop audit of per-mode gains: every closed flow stays Metzler,
/// denominators stay positive, and stacked positive vectors certify decay
/// across the worst admissible switching pattern.
VerifyReport verify_switched_closed_loop(const SwitchedSpec& sw, const DwellRegime& regime,
                                         const std::vector<Controller>& gains);

} // namespace posidwell
