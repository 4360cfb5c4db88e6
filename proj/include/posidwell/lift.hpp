#pragma once

#include <string>
#include <utility>
#include <vector>

#include "posidwell/certificate.hpp"
#include "posidwell/lp.hpp"
#include "posidwell/system.hpp"

namespace posidwell {

/// Sparse linear form over LP variables. The margin variable (index 0)
/// appears as an ordinary term.
using LinForm = std::vector<std::pair<int, double>>;

LinForm& accumulate(LinForm& into, const LinForm& add, double w = 1.0);

/// Polynomial in a local coordinate s in [0, 1] whose coefficients are
/// linear forms over LP variables.
struct LinPoly {
    std::vector<LinForm> c;  // ascending powers of s

    int degree() const { return static_cast<int>(c.size()) - 1; }
    void ensure_degree(int d);
    void add(int power, int var, double coeff);
    void add_scaled(const LinPoly& other, double w);

    /// Substitutes s -> alpha + beta * v, returning the polynomial in v.
    LinPoly compose_affine(double alpha, double beta) const;
};

/// Block of scalar functions of a clock on [a, b], laid out either as
/// polynomials of degree d or as piecewise-linear functions with d
/// segments, with one LP variable per coefficient or node.
///
/// With bounded = true the coefficients are confined to a large fixed box.
/// Certificate programs are cones, so the box is harmless normalization for
/// pure feasibility checks, and it keeps every simplex basis bounded on
/// instances large enough for degenerate pivot chains to blow the tableau
/// up. Leave it off when witness entries feed later arithmetic (synthesized
/// gains), where a vertex pressed against the box is a poor pick.
class FnBlock {
public:
    enum class Layout { Poly, Pwl };

    FnBlock(FeasibilityBuilder& builder, const std::string& prefix, int count, Layout layout,
            int d, double a, double b, bool bounded = false);

    int count() const { return count_; }
    double a() const { return a_; }
    double b() const { return b_; }
    Layout layout() const { return layout_; }

    int segments() const;
    double seg_lo(int k) const;
    double seg_hi(int k) const;

    /// Function j on segment k as a polynomial in the segment-local
    /// coordinate s in [0, 1].
    LinPoly poly_on(int j, int k) const;

    /// d/dtau of function j on segment k, again in the local coordinate.
    LinPoly dtau_on(int j, int k) const;

    /// Exact linear form for the value of function j at clock time tau.
    LinForm at(int j, double tau) const;

    /// Numeric polynomials in the clock variable from an LP witness.
    ClockPolyVec extract_poly(const std::vector<double>& witness) const;
    ClockPwlVec extract_pwl(const std::vector<double>& witness) const;

private:
    int base_ = 0;
    int count_ = 0;
    Layout layout_;
    int d_ = 1;
    double a_ = 0.0, b_ = 0.0;
};

/// One scalar inequality that must hold for every clock value in a window.
/// Terms reference functions from blocks sharing a common segmentation.
struct IntervalRow {
    struct Term {
        const FnBlock* block;
        int index;
        double weight;
        bool derivative;
    };
    std::vector<Term> terms;
    LinForm fixed;               // clock-independent contribution
    double t_coeff = 0.0;        // fixed margin coefficient (epsilon folding)
    bool strict_scaled = false;  // add margin scaled by the largest coefficient
    double lo = 0.0, hi = 0.0;   // clock window
};

/// Emits LP rows enforcing "row expression <= 0 on [lo, hi]" under the
/// given backend (Pwl: endpoint rows per affine segment; Handelman:
/// coefficient dominance with fresh nonnegative multipliers).
void emit_interval_row(FeasibilityBuilder& builder, const IntervalRow& row,
                       const Backend& backend);

/// Emits "linear form < 0" as a margin-scaled strict row.
void emit_strict_point(FeasibilityBuilder& builder, const LinForm& form);

/// Emits "linear form >= margin" (elementwise positivity of a value).
void emit_positive_point(FeasibilityBuilder& builder, const LinForm& form);

/// Emits "linear form + margin <= 0" (epsilon-style non-strict gap).
void emit_gap_point(FeasibilityBuilder& builder, const LinForm& form);

/// Handelman dominance rows certifying "p(s) <= 0 on [0, 1]" with
/// multiplier total degree at most dh. Throws parameter_error when the
/// polynomial degree exceeds dh.
void handelman_dominate(FeasibilityBuilder& builder, const LinPoly& p, int dh,
                        const std::string& prefix);

/// Stability check of a positive impulsive system under the given dwell
/// regime, as one feasibility LP selected by backend, statement, and
/// variant. Throws parameter_error on unsupported combinations and
/// regime_error when a regime precondition fails.
CheckResult lifted_check(const SystemSpec& s, const DwellRegime& regime, const Backend& backend,
                         Statement statement = Statement::Zeta,
                         std::optional<Variant> variant = std::nullopt);

/// Default transition-map ordering per regime: Primal for arbitrary,
/// Swapped for range, NonSwapped otherwise.
Variant default_variant(RegimeKind kind);

} // namespace posidwell
