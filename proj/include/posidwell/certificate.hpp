#pragma once

#include <optional>
#include <vector>

#include "posidwell/polynomial.hpp"
#include "posidwell/system.hpp"

namespace posidwell {

/// Which side the transition map is read from. Primal and Dual apply to the
/// arbitrary regime (row versus column conditions); NonSwapped and Swapped
/// pick the jump-then-flow versus flow-then-jump ordering in timed regimes.
enum class Variant { Primal, Dual, NonSwapped, Swapped };

/// Shape of a clock certificate: Zeta decreases toward the reset, Xi grows
/// from it (the flow inequality carries the opposite derivative sign).
enum class Statement { Zeta, Xi };

/// How an interval condition is turned into finitely many LP rows.
struct Backend {
    enum class Kind { Exact, Grid, Pwl, Handelman };
    Kind kind = Kind::Exact;
    int param = 0;  // grid points, segment count, or multiplier degree

    static Backend exact() { return {Kind::Exact, 0}; }
    static Backend grid(int points = 201) { return {Kind::Grid, points}; }
    static Backend pwl(int segments = 101) { return {Kind::Pwl, segments}; }
    static Backend handelman(int degree = 7) { return {Kind::Handelman, degree}; }

    void validate() const;
};

/// Vector of polynomials of the clock, coefficients in the clock variable
/// itself (not a normalized coordinate), valid on [a, b].
struct ClockPolyVec {
    std::vector<Poly> entries;
    double a = 0.0, b = 0.0;

    int size() const { return static_cast<int>(entries.size()); }
    std::vector<double> value(double tau) const;
};

/// Vector of piecewise-linear functions of the clock with equally spaced
/// nodes on [a, b].
struct ClockPwlVec {
    std::vector<std::vector<double>> nodes;  // [segments + 1][n]
    double a = 0.0, b = 0.0;

    int size() const { return nodes.empty() ? 0 : static_cast<int>(nodes.front().size()); }
    int segments() const { return static_cast<int>(nodes.size()) - 1; }
    std::vector<double> value(double tau) const;
};

enum class CertificateKind { VectorLambda, ClockPolynomial, ClockPiecewiseLinear };

/// Feasible witness of a stability condition. Vector certificates carry the
/// positive vector directly; clock certificates carry one function block
/// per mode (a single block for impulsive systems).
struct Certificate {
    CertificateKind kind = CertificateKind::VectorLambda;
    std::vector<double> lambda;
    std::vector<ClockPolyVec> poly;
    std::vector<ClockPwlVec> pwl;
    double margin = 0.0;
    DwellRegime regime;
    Variant variant = Variant::NonSwapped;
    std::optional<Statement> statement;
};

/// The positive vector condition implied by a certificate: the vector
/// itself, or the clock functions evaluated at their anchor endpoints.
std::vector<double> certificate_lambda(const Certificate& cert);

struct CheckResult {
    std::optional<Certificate> certificate;
    double margin = 0.0;
    int lp_rows = 0;
    int lp_cols = 0;
    double lp_seconds = 0.0;

    bool feasible() const { return certificate.has_value(); }
};

} // namespace posidwell
