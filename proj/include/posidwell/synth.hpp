#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "posidwell/certificate.hpp"
#include "posidwell/system.hpp"

namespace posidwell {

/// State-feedback law for a positive impulsive system. Between jumps the
/// input is u(t) = Kc(tau) x(t) with tau the time since the last jump; at a
/// jump the input is u_d = Kd x. Flow gains are rational in tau: entry
/// (i, j) equals Kc_num[i][j](tau) / Kc_den[j](tau), where Kc_den holds the
/// diagonal of the certificate. Evaluation clamps tau into [a, b]; hold_at
/// records that dwells longer than b intentionally freeze the gain there.
struct Controller {
    Matrix Kd{0, 0};
    std::vector<std::vector<Poly>> Kc_num;  // mc rows of n entries
    std::vector<Poly> Kc_den;               // n entries, positive on [a, b]
    double a = 0.0;
    double b = 0.0;
    std::optional<double> hold_at;

    /// Dwell-scheduled jump gain: entry (i, j) of Kd(theta) is
    /// Kd_num[i][j](theta), valid for theta in Kd_interval. When absent the
    /// constant Kd applies.
    std::optional<std::vector<std::vector<Poly>>> Kd_num;
    std::optional<std::pair<double, double>> Kd_interval;

    int n() const { return static_cast<int>(Kc_den.size()); }
    int mc() const { return static_cast<int>(Kc_num.size()); }
    int md() const { return Kd.rows(); }

    /// Flow gain at clock time tau (clamped into [a, b]). mc x n.
    Matrix Kc_eval(double tau) const;

    /// Jump gain for a dwell of length theta; constant unless scheduled.
    Matrix Kd_eval(double theta) const;
};

struct SynthesisResult {
    std::optional<Controller> controller;
    std::optional<Certificate> certificate;
    double margin = 0.0;
    int lp_rows = 0;
    int lp_cols = 0;
    double lp_seconds = 0.0;

    bool ok() const { return controller.has_value(); }
};

/// Gain synthesis rendering the closed loop positive and stable under the
/// named dwell regime. The decision program is linear: a diagonal
/// polynomial certificate X(tau), input shapes U(tau) and U_d, and a
/// positivity shift alpha; gains are recovered as U X^{-1}. Timed regimes
/// need the Handelman backend (its degree sets the polynomial degree);
/// synthesis with the piecewise-linear backend throws parameter_error
/// because the gains would leave the rational-polynomial form.
SynthesisResult synth_arbitrary(const SystemSpec& s);

/// Constant dwell T. reverse picks the time-reversed variant, which anchors
/// the certificate at T instead of 0 and reads the jump gain from X(0).
SynthesisResult synth_constant(const SystemSpec& s, double T,
                               const Backend& backend = Backend::handelman(1),
                               bool reverse = false);

/// Minimum dwell T; flow gains hold their value at T for longer dwells.
SynthesisResult synth_minimum(const SystemSpec& s, double T,
                              const Backend& backend = Backend::handelman(1));

/// Maximum dwell T.
SynthesisResult synth_maximum(const SystemSpec& s, double T,
                              const Backend& backend = Backend::handelman(1));

/// Dwell range [T_min, T_max]. scheduled_jump additionally shapes the jump
/// gain by the realized dwell length theta.
SynthesisResult synth_range(const SystemSpec& s, double T_min, double T_max,
                            const Backend& backend = Backend::handelman(1),
                            bool scheduled_jump = false);

/// Independent closed-loop audit of a controller against a system and
/// regime: positivity of the closed flow and jump maps, denominator
/// positivity, and the regime's vector stability condition on the
/// numerically integrated transition map.
struct VerifyReport {
    bool pass = false;
    bool metzler_ok = false;
    bool jump_nonneg_ok = false;
    bool denom_ok = false;
    bool lp_ok = false;
    double min_denominator = 0.0;
    double lp_margin = 0.0;
    double integration_error = 0.0;
    std::string detail;
};

VerifyReport verify_closed_loop(const SystemSpec& s, const DwellRegime& regime,
                                const Controller& k);

/// Transition matrix of the closed flow over one dwell of the given
/// length: fourth-order Runge-Kutta on the matrix flow equation, with the
/// gain clock running from zero. With no flow input this integrates the
/// plant flow alone.
Matrix closed_transition(const SystemSpec& s, const Controller& k, double length, int steps);

} // namespace posidwell
