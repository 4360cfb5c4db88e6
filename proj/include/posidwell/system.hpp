#pragma once

#include <optional>
#include <vector>

#include "posidwell/matrix.hpp"

namespace posidwell {

/// Linear impulsive plant: continuous flow dx/dt = A x + B_c u between
/// impulse instants and state reset x+ = J x + B_d v at each instant.
/// Input matrices are optional; analysis entry points use only A and J.
struct SystemSpec {
    Matrix A;
    Matrix J;
    std::optional<Matrix> B_c;
    std::optional<Matrix> B_d;

    int n() const { return A.rows(); }
    int mc() const { return B_c ? B_c->cols() : 0; }
    int md() const { return B_d ? B_d->cols() : 0; }

    /// Throws dimension_error on shape mismatches.
    void validate() const;
};

enum class RegimeKind { Arbitrary, Constant, Minimum, Maximum, Range };

/// Constraint on the spacing of impulse (or switching) instants.
struct DwellRegime {
    RegimeKind kind = RegimeKind::Arbitrary;
    double T = 0.0;       // Constant, Minimum, Maximum
    double T_min = 0.0;   // Range
    double T_max = 0.0;   // Range; may be +infinity

    static DwellRegime arbitrary();
    static DwellRegime constant(double T);
    static DwellRegime minimum(double T);
    static DwellRegime maximum(double T);
    static DwellRegime range(double T_min, double T_max);

    /// Throws parameter_error on nonpositive or inverted dwell bounds.
    void validate() const;
};

/// True when every off-diagonal entry is >= -tol.
bool is_metzler(const Matrix& m, double tol = 0.0);

/// True when every entry is >= -tol.
bool is_nonnegative(const Matrix& m, double tol = 0.0);

/// Stability of a Metzler matrix: spectral abscissa < 0. Throws
/// domain_error when the input is not Metzler.
bool hurwitz_metzler(const Matrix& m);

/// Spectral abscissa of a Metzler matrix (its rightmost eigenvalue is
/// real), computed by a diagonal shift and the nonnegative spectral radius.
double metzler_abscissa(const Matrix& m);

/// Discrete stability of a nonnegative matrix: spectral radius < 1.
/// Throws domain_error when the input has a negative entry.
bool schur_nonnegative(const Matrix& m);

/// One-period transition maps of the impulse-sampled system at spacing T,
/// in both orderings together with their transposes.
struct EmbeddedMaps {
    Matrix jump_after_flow;     // J * expm(A T)
    Matrix flow_after_jump;     // expm(A T) * J
    Matrix jump_after_flow_t;
    Matrix flow_after_jump_t;
};

EmbeddedMaps embedded_maps(const SystemSpec& s, double T);

/// Routh test on a monic real polynomial (coefficients highest power
/// first): true exactly when every root lies in the open left half plane.
/// Borderline (zero or near-zero pivot) counts as not Hurwitz.
bool routh_hurwitz(const std::vector<double>& coeffs);

} // namespace posidwell
