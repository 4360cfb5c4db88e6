#include "posidwell/dwell.hpp"

#include <cmath>
#include <limits>

namespace posidwell {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void emit_row_form(FeasibilityBuilder& fb, const std::vector<int>& lam, const Matrix& m,
                   bool strict) {
    // lambda' m < 0 (or <= 0) columnwise.
    for (int j = 0; j < m.cols(); ++j) {
        LinForm f;
        for (int i = 0; i < m.rows(); ++i)
            if (m(i, j) != 0.0) f.emplace_back(lam[static_cast<size_t>(i)], m(i, j));
        if (strict)
            emit_strict_point(fb, f);
        else
            fb.add_leq(f, 0.0);
    }
}

void emit_col_form(FeasibilityBuilder& fb, const std::vector<int>& lam, const Matrix& m,
                   bool strict) {
    // m lambda < 0 (or <= 0) rowwise.
    for (int i = 0; i < m.rows(); ++i) {
        LinForm f;
        for (int j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0) f.emplace_back(lam[static_cast<size_t>(j)], m(i, j));
        if (strict)
            emit_strict_point(fb, f);
        else
            fb.add_leq(f, 0.0);
    }
}

} // namespace

CheckResult check_arbitrary(const SystemSpec& s, Variant variant, bool persistent_flow) {
    s.validate();
    if (!is_metzler(s.A)) throw domain_error("flow matrix must be Metzler for a positive system");
    if (!is_nonnegative(s.J))
        throw domain_error("jump matrix must be nonnegative for a positive system");
    if (variant != Variant::Primal && variant != Variant::Dual)
        throw parameter_error("the arbitrary regime takes the Primal or Dual variant");

    const int n = s.n();
    FeasibilityBuilder fb;
    std::vector<int> lam;
    for (int j = 0; j < n; ++j) lam.push_back(fb.add_variable("l" + std::to_string(j)));
    for (int v : lam) fb.require_positive(v);

    Matrix jmi = s.J - Matrix::identity(n);
    if (variant == Variant::Primal) {
        emit_row_form(fb, lam, s.A, true);
        emit_row_form(fb, lam, jmi, !persistent_flow);
    } else {
        emit_col_form(fb, lam, s.A, true);
        emit_col_form(fb, lam, jmi, !persistent_flow);
    }

    FeasibilityResult fr = fb.solve_max_margin();
    CheckResult res;
    res.margin = fr.margin;
    res.lp_rows = fr.rows;
    res.lp_cols = fr.cols;
    res.lp_seconds = fr.seconds;
    if (fr.feasible) {
        Certificate cert;
        cert.kind = CertificateKind::VectorLambda;
        for (int v : lam) cert.lambda.push_back(fr.witness[static_cast<size_t>(v)]);
        cert.margin = fr.margin;
        cert.regime = DwellRegime::arbitrary();
        cert.variant = variant;
        res.certificate = cert;
    }
    return res;
}

CheckResult check_constant(const SystemSpec& s, double T, const Backend& backend,
                           Statement statement, std::optional<Variant> variant) {
    return lifted_check(s, DwellRegime::constant(T), backend, statement, variant);
}

CheckResult check_minimum(const SystemSpec& s, double T, const Backend& backend,
                          Statement statement, std::optional<Variant> variant) {
    return lifted_check(s, DwellRegime::minimum(T), backend, statement, variant);
}

CheckResult check_maximum(const SystemSpec& s, double T, const Backend& backend,
                          Statement statement, std::optional<Variant> variant) {
    return lifted_check(s, DwellRegime::maximum(T), backend, statement, variant);
}

CheckResult check_range(const SystemSpec& s, double T_min, double T_max, const Backend& backend,
                        Statement statement, std::optional<Variant> variant) {
    return lifted_check(s, DwellRegime::range(T_min, T_max), backend, statement, variant);
}

EstimateResult estimate_bound(const SystemSpec& s, RegimeKind kind, double tol,
                              const Backend& backend, Statement statement,
                              std::optional<Variant> variant) {
    if (kind != RegimeKind::Minimum && kind != RegimeKind::Maximum)
        throw parameter_error(
            "threshold estimation applies to the minimum and maximum dwell regimes");
    if (!(tol > 0.0)) throw parameter_error("estimation tolerance must be positive");

    EstimateResult out;
    auto probe = [&](double T) {
        ++out.solves;
        DwellRegime r = kind == RegimeKind::Minimum ? DwellRegime::minimum(T)
                                                    : DwellRegime::maximum(T);
        return lifted_check(s, r, backend, statement, variant);
    };
    const double floor_T = std::ldexp(1.0, -30);
    const double ceil_T = std::ldexp(1.0, 30);
    // Matrix exponentials overflow well before the geometric cap when the
    // flow is unstable; treat dwell times past this bound as unbounded.
    const double overflow_T = 600.0 / (1.0 + s.A.norm_inf());

    double lo = 0.0, hi = 0.0;  // infeasible and feasible bracket ends
    std::optional<CheckResult> at_lo, at_hi;

    double T = 1.0;
    CheckResult first = probe(T);

    if (kind == RegimeKind::Minimum) {
        if (first.feasible()) {
            hi = T;
            at_hi = first;
            while (true) {
                if (hi <= 2.0 * floor_T) {
                    out.threshold = hi;
                    out.feasible_side = at_hi;
                    return out;  // feasible down to the smallest probe
                }
                const double next = hi * 0.5;
                CheckResult q = probe(next);
                if (q.feasible()) {
                    hi = next;
                    at_hi = q;
                } else {
                    lo = next;
                    at_lo = q;
                    break;
                }
            }
        } else {
            lo = T;
            at_lo = first;
            while (true) {
                if (lo >= ceil_T)
                    throw no_finite_threshold("no feasible minimum dwell in the search range");
                const double next = lo * 2.0;
                CheckResult q = probe(next);
                if (!q.feasible()) {
                    lo = next;
                    at_lo = q;
                } else {
                    hi = next;
                    at_hi = q;
                    break;
                }
            }
        }
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            CheckResult q = probe(mid);
            if (q.feasible()) {
                hi = mid;
                at_hi = q;
            } else {
                lo = mid;
                at_lo = q;
            }
        }
        out.threshold = hi;
        out.feasible_side = at_hi;
        out.infeasible_side = at_lo;
        return out;
    }

    // Maximum dwell: feasibility shrinks as the dwell grows.
    if (first.feasible()) {
        lo = T;
        at_lo = first;  // here lo is the feasible end
        while (true) {
            if (lo >= ceil_T || 2.0 * lo >= overflow_T) {
                out.threshold = kInf;
                out.feasible_side = at_lo;
                return out;
            }
            const double next = lo * 2.0;
            CheckResult q = probe(next);
            if (q.feasible()) {
                lo = next;
                at_lo = q;
            } else {
                hi = next;
                at_hi = q;
                break;
            }
        }
    } else {
        hi = T;
        at_hi = first;
        while (true) {
            if (hi <= 2.0 * floor_T)
                throw no_finite_threshold("no feasible maximum dwell in the search range");
            const double next = hi * 0.5;
            CheckResult q = probe(next);
            if (!q.feasible()) {
                hi = next;
                at_hi = q;
            } else {
                lo = next;
                at_lo = q;
                break;
            }
        }
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        CheckResult q = probe(mid);
        if (q.feasible()) {
            lo = mid;
            at_lo = q;
        } else {
            hi = mid;
            at_hi = q;
        }
    }
    out.threshold = lo;
    out.feasible_side = at_lo;
    out.infeasible_side = at_hi;
    return out;
}

namespace {

bool matrix_is_zero(const Matrix& m) { return m.max_abs() == 0.0; }

} // namespace

RangeEstimate estimate_range(const SystemSpec& s, double tol, int points,
                             std::optional<Variant> variant) {
    s.validate();
    if (!(tol > 0.0)) throw parameter_error("estimation tolerance must be positive");
    if (points < 2) throw parameter_error("range certification needs at least two grid points");
    if (!is_metzler(s.A)) throw domain_error("flow matrix must be Metzler for a positive system");
    if (!is_nonnegative(s.J))
        throw domain_error("jump matrix must be nonnegative for a positive system");

    RangeEstimate out;
    const Variant var = variant.value_or(Variant::Swapped);

    if (matrix_is_zero(s.J)) {
        // Every jump resets the state to zero; any spacing is admissible.
        out.spectral = {tol, kInf};
        out.certified = {tol, kInf};
        return out;
    }

    auto schur_at = [&](double T) {
        try {
            return spectral_radius(expm(s.A, T) * s.J) < 1.0;
        } catch (const domain_error&) {
            return false;  // overflow far from the window
        }
    };

    // Geometric ladder over [1e-6, 1e6] to find the Schur window.
    const double lo_T = 1e-6, hi_T = 1e6;
    const double factor = std::sqrt(2.0);
    std::vector<double> ladder;
    for (double T = lo_T; T <= hi_T; T *= factor) ladder.push_back(T);

    int first_ok = -1, last_ok = -1;
    for (size_t k = 0; k < ladder.size(); ++k) {
        const bool ok = schur_at(ladder[k]);
        if (ok && first_ok < 0) first_ok = static_cast<int>(k);
        if (first_ok >= 0) {
            if (ok)
                last_ok = static_cast<int>(k);
            else
                break;  // window ended
        }
    }
    if (first_ok < 0) return out;

    auto bisect = [&](double bad, double good, bool good_above) {
        // Returns the crossing, keeping track of which side is feasible.
        while (std::abs(good - bad) > tol) {
            const double mid = 0.5 * (good + bad);
            if (schur_at(mid))
                good = mid;
            else
                bad = mid;
        }
        return good_above ? std::pair<double, double>{bad, good}
                          : std::pair<double, double>{good, bad};
    };

    double win_lo, win_lo_bad;
    if (first_ok == 0) {
        win_lo = 0.0;
        win_lo_bad = 0.0;
    } else {
        auto [bad, good] = bisect(ladder[static_cast<size_t>(first_ok) - 1],
                                  ladder[static_cast<size_t>(first_ok)], true);
        win_lo = good;
        win_lo_bad = bad;
    }
    double win_hi, win_hi_bad;
    if (last_ok + 1 >= static_cast<int>(ladder.size())) {
        win_hi = kInf;
        win_hi_bad = kInf;
    } else {
        auto [good, bad] = bisect(ladder[static_cast<size_t>(last_ok) + 1],
                                  ladder[static_cast<size_t>(last_ok)], false);
        win_hi = good;
        win_hi_bad = bad;
    }
    out.spectral = {win_lo, win_hi};
    if (!std::isfinite(win_hi)) return out;

    // Certified window: first push the top edge with exact single-point
    // checks, then grow the interval downward under one shared witness.
    auto point_ok = [&](double T) {
        ++out.solves;
        return lifted_check(s, DwellRegime::range(T, T), Backend::grid(1), Statement::Zeta, var)
            .feasible();
    };
    double good_b = 0.5 * (std::max(win_lo, lo_T) + win_hi);
    if (!point_ok(good_b)) return out;  // spectral window too thin to certify
    double bad_b = win_hi_bad;
    while (bad_b - good_b > tol) {
        const double mid = 0.5 * (good_b + bad_b);
        if (point_ok(mid))
            good_b = mid;
        else
            bad_b = mid;
    }
    const double b_hat = good_b - tol;

    auto window_ok = [&](double a) {
        ++out.solves;
        return lifted_check(s, DwellRegime::range(a, b_hat), Backend::grid(points),
                            Statement::Zeta, var)
            .feasible();
    };
    if (!window_ok(b_hat - tol)) return out;
    double good_a = b_hat - tol;
    double bad_a = std::max(win_lo_bad, lo_T * 0.5);
    if (window_ok(bad_a)) {
        good_a = bad_a;
    } else {
        while (good_a - bad_a > tol) {
            const double mid = 0.5 * (good_a + bad_a);
            if (window_ok(mid))
                good_a = mid;
            else
                bad_a = mid;
        }
    }
    out.certified = {good_a, b_hat};
    return out;
}

double estimate_range_max(const SystemSpec& s, double T_min, int points, double tol,
                          std::optional<Variant> variant) {
    if (!(T_min > 0.0) || !std::isfinite(T_min))
        throw parameter_error("range lower bound must be positive and finite");
    if (!(tol > 0.0)) throw parameter_error("estimation tolerance must be positive");
    const Variant var = variant.value_or(Variant::Swapped);

    auto ok = [&](double T_max) {
        return lifted_check(s, DwellRegime::range(T_min, T_max), Backend::grid(points),
                            Statement::Zeta, var)
            .feasible();
    };
    const double ceil_T = std::ldexp(1.0, 30);
    const double overflow_T = 600.0 / (1.0 + s.A.norm_inf());

    double T = std::max(1.0, T_min * 2.0);
    double lo = 0.0, hi = 0.0;
    if (ok(T)) {
        lo = T;
        while (true) {
            if (lo >= ceil_T || 2.0 * lo >= overflow_T) return kInf;
            const double next = lo * 2.0;
            if (ok(next)) {
                lo = next;
            } else {
                hi = next;
                break;
            }
        }
    } else {
        hi = T;
        while (true) {
            if (hi <= T_min * (1.0 + 1e-9))
                throw no_finite_threshold("no feasible range upper bound above the lower bound");
            const double next = std::max(hi * 0.5, T_min);
            if (!ok(next)) {
                hi = next;
            } else {
                lo = next;
                break;
            }
        }
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (ok(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

} // namespace posidwell
