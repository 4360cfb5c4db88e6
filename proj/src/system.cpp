#include "posidwell/system.hpp"

#include <cmath>
#include <limits>

namespace posidwell {

void SystemSpec::validate() const {
    if (A.rows() != A.cols()) throw dimension_error("flow matrix must be square");
    if (A.rows() == 0) throw dimension_error("system must have at least one state");
    if (J.rows() != A.rows() || J.cols() != A.cols())
        throw dimension_error("jump matrix shape does not match the flow matrix");
    if (B_c && B_c->rows() != A.rows())
        throw dimension_error("flow input matrix row count does not match the state dimension");
    if (B_d && B_d->rows() != A.rows())
        throw dimension_error("jump input matrix row count does not match the state dimension");
}

DwellRegime DwellRegime::arbitrary() { return {RegimeKind::Arbitrary, 0.0, 0.0, 0.0}; }
DwellRegime DwellRegime::constant(double T) { return {RegimeKind::Constant, T, 0.0, 0.0}; }
DwellRegime DwellRegime::minimum(double T) { return {RegimeKind::Minimum, T, 0.0, 0.0}; }
DwellRegime DwellRegime::maximum(double T) { return {RegimeKind::Maximum, T, 0.0, 0.0}; }
DwellRegime DwellRegime::range(double T_min, double T_max) {
    return {RegimeKind::Range, 0.0, T_min, T_max};
}

void DwellRegime::validate() const {
    switch (kind) {
    case RegimeKind::Arbitrary:
        return;
    case RegimeKind::Constant:
    case RegimeKind::Minimum:
    case RegimeKind::Maximum:
        if (!(T > 0.0) || !std::isfinite(T))
            throw parameter_error("dwell time must be positive and finite");
        return;
    case RegimeKind::Range:
        if (!(T_min > 0.0) || !std::isfinite(T_min))
            throw parameter_error("range dwell lower bound must be positive and finite");
        if (!(T_max >= T_min)) throw parameter_error("range dwell bounds are inverted");
        return;
    }
}

bool is_metzler(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (i != j && m(i, j) < -tol) return false;
    return true;
}

bool is_nonnegative(const Matrix& m, double tol) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (m(i, j) < -tol) return false;
    return true;
}

double metzler_abscissa(const Matrix& m) {
    if (!is_metzler(m)) throw domain_error("spectral abscissa shift needs a Metzler matrix");
    double dmax = 0.0;
    for (int i = 0; i < m.rows(); ++i) dmax = std::max(dmax, std::abs(m(i, i)));
    const double c = dmax + 1.0;
    Matrix shifted = m;
    for (int i = 0; i < m.rows(); ++i) shifted(i, i) += c;
    return spectral_radius(shifted) - c;
}

bool hurwitz_metzler(const Matrix& m) { return metzler_abscissa(m) < 0.0; }

bool schur_nonnegative(const Matrix& m) { return spectral_radius(m) < 1.0; }

EmbeddedMaps embedded_maps(const SystemSpec& s, double T) {
    s.validate();
    if (!(T > 0.0) || !std::isfinite(T))
        throw parameter_error("embedded map spacing must be positive and finite");
    const Matrix phi = expm(s.A, T);
    EmbeddedMaps maps;
    maps.jump_after_flow = s.J * phi;
    maps.flow_after_jump = phi * s.J;
    maps.jump_after_flow_t = maps.jump_after_flow.transpose();
    maps.flow_after_jump_t = maps.flow_after_jump.transpose();
    return maps;
}

bool routh_hurwitz(const std::vector<double>& coeffs) {
    if (coeffs.empty()) throw parameter_error("empty polynomial");
    const size_t deg = coeffs.size() - 1;
    if (deg == 0) return true;

    double scale = 0.0;
    for (double c : coeffs) scale = std::max(scale, std::abs(c));
    const double tol = 1e-12 * scale;
    if (coeffs[0] <= tol) return false;

    // Two working rows of the Routh array.
    const size_t w = deg / 2 + 1;
    std::vector<double> r0(w, 0.0), r1(w, 0.0);
    for (size_t k = 0; k < coeffs.size(); k += 2) r0[k / 2] = coeffs[k];
    for (size_t k = 1; k < coeffs.size(); k += 2) r1[(k - 1) / 2] = coeffs[k];

    // deg - 1 derived rows; every first-column entry must stay positive.
    for (size_t step = 0; step + 1 < deg; ++step) {
        if (r1[0] <= tol) return false;
        std::vector<double> next(w, 0.0);
        for (size_t j = 0; j + 1 < w; ++j)
            next[j] = r0[j + 1] - (r0[0] / r1[0]) * r1[j + 1];
        r0 = r1;
        r1 = std::move(next);
    }
    return r1[0] > tol;
}

} // namespace posidwell
