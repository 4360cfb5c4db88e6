#include "posidwell/switched.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "posidwell/errors.hpp"
#include "posidwell/lift.hpp"
#include "posidwell/lp.hpp"

namespace posidwell {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LinForm negated(LinForm form) {
    for (auto& t : form) t.second = -t.second;
    return form;
}

void require_metzler_modes(const SwitchedSpec& sw) {
    // Closed-loop flows built from synthesized gains carry division
    // round-off in their off-diagonals, so leave room for it.
    for (const auto& mode : sw.modes)
        if (!is_metzler(mode.A, 1e-9))
            throw domain_error("every mode flow matrix must be Metzler");
}

void require_intervals(const SwitchedSpec& sw) {
    if (static_cast<int>(sw.intervals.size()) != sw.N())
        throw parameter_error("the range regime needs one dwell window per mode");
}

}  // namespace

void SwitchedSpec::validate() const {
    if (modes.empty()) throw dimension_error("a switched plant needs at least one mode");
    const int nn = n();
    const bool with_input = modes.front().B.has_value();
    const int mm = m();
    for (const auto& mode : modes) {
        if (mode.A.rows() != nn || mode.A.cols() != nn)
            throw dimension_error("every mode flow matrix must be square of the shared size");
        mode.A.check_finite("mode flow matrix");
        if (mode.B.has_value() != with_input)
            throw dimension_error("either every mode has an input matrix or none does");
        if (mode.B) {
            if (mode.B->rows() != nn || mode.B->cols() != mm)
                throw dimension_error("every mode input matrix must share the plant dimensions");
            mode.B->check_finite("mode input matrix");
        }
    }
    if (!intervals.empty()) {
        if (static_cast<int>(intervals.size()) != N())
            throw parameter_error("dwell windows must come one per mode");
        for (const auto& [lo, hi] : intervals) {
            if (!(lo > 0.0) || !std::isfinite(lo))
                throw parameter_error("dwell window lower bounds must be positive and finite");
            if (!(hi >= lo)) throw parameter_error("dwell window upper bounds must not be inverted");
        }
    }
}

ImpulsiveLift lift_to_impulsive(const SwitchedSpec& sw) {
    sw.validate();
    const int N = sw.N();
    const int n = sw.n();
    std::vector<Matrix> blocks;
    blocks.reserve(static_cast<size_t>(N));
    for (const auto& mode : sw.modes) blocks.push_back(mode.A);
    ImpulsiveLift out;
    out.Abar = block_diag(blocks);
    out.jump.assign(static_cast<size_t>(N), std::vector<Matrix>(static_cast<size_t>(N)));
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            Matrix J(N * n, N * n);
            for (int r = 0; r < n; ++r) J(i * n + r, j * n + r) = 1.0;
            out.jump[static_cast<size_t>(i)][static_cast<size_t>(j)] = std::move(J);
        }
    return out;
}

CheckResult check_arbitrary_switching(const SwitchedSpec& sw, Variant variant) {
    sw.validate();
    require_metzler_modes(sw);
    if (variant != Variant::Primal && variant != Variant::Dual)
        throw parameter_error("arbitrary switching admits the primal and dual variants");
    const int n = sw.n();

    FeasibilityBuilder fb;
    std::vector<int> lam(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        lam[static_cast<size_t>(j)] = fb.add_variable("l" + std::to_string(j));
        fb.require_positive(lam[static_cast<size_t>(j)]);
    }
    for (const auto& mode : sw.modes)
        for (int i = 0; i < n; ++i) {
            LinForm f;
            for (int j = 0; j < n; ++j) {
                const double c =
                    variant == Variant::Primal ? mode.A(j, i) : mode.A(i, j);
                if (c != 0.0) f.emplace_back(lam[static_cast<size_t>(j)], c);
            }
            fb.add_strict(f);
        }

    auto res = fb.solve_max_margin();
    CheckResult out;
    out.margin = res.margin;
    out.lp_rows = res.rows;
    out.lp_cols = res.cols;
    out.lp_seconds = res.seconds;
    if (res.feasible) {
        Certificate cert;
        cert.kind = CertificateKind::VectorLambda;
        cert.lambda.reserve(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j)
            cert.lambda.push_back(res.witness[static_cast<size_t>(lam[static_cast<size_t>(j)])]);
        cert.margin = res.margin;
        cert.regime = DwellRegime::arbitrary();
        cert.variant = variant;
        out.certificate = std::move(cert);
    }
    return out;
}

namespace {

// Direct per-mode vector conditions for a minimum dwell: each mode decays
// under its own lambda_i, and dwelling T in the current mode then reading
// the next mode's vector still decreases the function.
CheckResult min_dwell_exact(const SwitchedSpec& sw, double T) {
    const int N = sw.N();
    const int n = sw.n();
    std::vector<Matrix> maps;
    maps.reserve(static_cast<size_t>(N));
    for (const auto& mode : sw.modes) maps.push_back(expm(mode.A, T));

    FeasibilityBuilder fb;
    std::vector<int> lam(static_cast<size_t>(N * n));
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < n; ++j) {
            const int v = fb.add_variable("l" + std::to_string(i) + "_" + std::to_string(j));
            lam[static_cast<size_t>(i * n + j)] = v;
            fb.require_positive(v);
        }
    for (int i = 0; i < N; ++i)
        for (int kk = 0; kk < n; ++kk) {
            LinForm f;
            for (int r = 0; r < n; ++r) {
                const double c = sw.modes[static_cast<size_t>(i)].A(r, kk);
                if (c != 0.0) f.emplace_back(lam[static_cast<size_t>(i * n + r)], c);
            }
            fb.add_strict(f);
        }
    // After holding the current mode for T, the next mode's vector reads
    // lower than the current one did at entry.
    for (int cur = 0; cur < N; ++cur)
        for (int nxt = 0; nxt < N; ++nxt) {
            if (cur == nxt) continue;
            const Matrix& M = maps[static_cast<size_t>(cur)];
            for (int kk = 0; kk < n; ++kk) {
                LinForm f;
                for (int r = 0; r < n; ++r)
                    if (M(r, kk) != 0.0)
                        f.emplace_back(lam[static_cast<size_t>(nxt * n + r)], M(r, kk));
                f.emplace_back(lam[static_cast<size_t>(cur * n + kk)], -1.0);
                fb.add_strict(f);
            }
        }

    auto res = fb.solve_max_margin();
    CheckResult out;
    out.margin = res.margin;
    out.lp_rows = res.rows;
    out.lp_cols = res.cols;
    out.lp_seconds = res.seconds;
    if (res.feasible) {
        Certificate cert;
        cert.kind = CertificateKind::VectorLambda;
        cert.lambda.reserve(static_cast<size_t>(N * n));
        for (int v : lam) cert.lambda.push_back(res.witness[static_cast<size_t>(v)]);
        cert.margin = res.margin;
        cert.regime = DwellRegime::minimum(T);
        cert.variant = Variant::Primal;
        out.certificate = std::move(cert);
    }
    return out;
}

// Clock certificate form of the minimum dwell conditions: one function
// vector per mode on [0, T], anchored at T (Zeta) or 0 (Xi).
CheckResult min_dwell_lifted(const SwitchedSpec& sw, double T, const Backend& backend,
                             Statement statement) {
    const int N = sw.N();
    const int n = sw.n();
    const bool zeta = statement == Statement::Zeta;
    const double anchor = zeta ? T : 0.0;
    const int deriv_sign = zeta ? -1 : +1;
    const FnBlock::Layout layout =
        backend.kind == Backend::Kind::Pwl ? FnBlock::Layout::Pwl : FnBlock::Layout::Poly;

    FeasibilityBuilder fb;
    std::vector<FnBlock> z;
    z.reserve(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i)
        z.emplace_back(fb, "z" + std::to_string(i) + "_", n, layout, backend.param, 0.0, T, true);

    for (int i = 0; i < N; ++i) {
        const Matrix& A = sw.modes[static_cast<size_t>(i)].A;
        for (int j = 0; j < n; ++j) emit_positive_point(fb, z[static_cast<size_t>(i)].at(j, anchor));
        for (int kk = 0; kk < n; ++kk) {
            LinForm f;
            for (int r = 0; r < n; ++r)
                if (A(r, kk) != 0.0)
                    accumulate(f, z[static_cast<size_t>(i)].at(r, anchor), A(r, kk));
            emit_strict_point(fb, f);
        }
        for (int kk = 0; kk < n; ++kk) {
            IntervalRow row;
            row.lo = 0.0;
            row.hi = T;
            for (int r = 0; r < n; ++r)
                if (A(r, kk) != 0.0)
                    row.terms.push_back({&z[static_cast<size_t>(i)], r, A(r, kk), false});
            row.terms.push_back({&z[static_cast<size_t>(i)], kk, static_cast<double>(deriv_sign), true});
            emit_interval_row(fb, row, backend);
        }
    }
    // Coupling across every ordered mode pair with a unit gap.
    for (int p = 0; p < N; ++p)
        for (int q = 0; q < N; ++q) {
            if (p == q) continue;
            for (int r = 0; r < n; ++r) {
                LinForm f = z[static_cast<size_t>(p)].at(r, zeta ? T : 0.0);
                accumulate(f, z[static_cast<size_t>(q)].at(r, zeta ? 0.0 : T), -1.0);
                emit_gap_point(fb, f);
            }
        }

    auto res = fb.solve_max_margin();
    CheckResult out;
    out.margin = res.margin;
    out.lp_rows = res.rows;
    out.lp_cols = res.cols;
    out.lp_seconds = res.seconds;
    if (res.feasible) {
        Certificate cert;
        cert.margin = res.margin;
        cert.regime = DwellRegime::minimum(T);
        cert.variant = Variant::NonSwapped;
        cert.statement = statement;
        if (layout == FnBlock::Layout::Poly) {
            cert.kind = CertificateKind::ClockPolynomial;
            for (const auto& blk : z) cert.poly.push_back(blk.extract_poly(res.witness));
        } else {
            cert.kind = CertificateKind::ClockPiecewiseLinear;
            for (const auto& blk : z) cert.pwl.push_back(blk.extract_pwl(res.witness));
        }
        out.certificate = std::move(cert);
    }
    return out;
}

}  // namespace

CheckResult check_min_dwell_switching(const SwitchedSpec& sw, double T, const Backend& backend,
                                      Statement statement) {
    sw.validate();
    require_metzler_modes(sw);
    backend.validate();
    if (!(T > 0.0) || !std::isfinite(T))
        throw parameter_error("minimum dwell must be positive and finite");
    switch (backend.kind) {
        case Backend::Kind::Exact:
            return min_dwell_exact(sw, T);
        case Backend::Kind::Handelman:
        case Backend::Kind::Pwl:
            return min_dwell_lifted(sw, T, backend, statement);
        case Backend::Kind::Grid:
            break;
    }
    throw parameter_error("the gridded backend does not apply to the minimum dwell forms");
}

namespace {

// Sampled per-mode vector conditions across the dwell windows. A mode
// with an unbounded window contributes its own flow rows and couples at
// its lower bound only.
CheckResult range_dwell_gridded(const SwitchedSpec& sw, int points) {
    const int N = sw.N();
    const int n = sw.n();
    if (points < 1) throw parameter_error("grid sampling needs at least one point");

    FeasibilityBuilder fb;
    std::vector<int> lam(static_cast<size_t>(N * n));
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < n; ++j) {
            const int v = fb.add_variable("l" + std::to_string(i) + "_" + std::to_string(j));
            lam[static_cast<size_t>(i * n + j)] = v;
            fb.require_positive(v);
        }

    for (int cur = 0; cur < N; ++cur) {
        const auto& [lo, hi] = sw.intervals[static_cast<size_t>(cur)];
        const Matrix& A = sw.modes[static_cast<size_t>(cur)].A;
        const bool unbounded = !std::isfinite(hi);
        if (unbounded)
            for (int kk = 0; kk < n; ++kk) {
                LinForm f;
                for (int r = 0; r < n; ++r)
                    if (A(r, kk) != 0.0) f.emplace_back(lam[static_cast<size_t>(cur * n + r)], A(r, kk));
                fb.add_strict(f);
            }
        std::vector<double> thetas;
        if (unbounded || hi == lo) {
            thetas.push_back(lo);
        } else {
            const int Q = std::max(2, points);
            for (int q = 0; q < Q; ++q) thetas.push_back(lo + (hi - lo) * q / (Q - 1));
        }
        for (double theta : thetas) {
            const Matrix M = expm(A, theta);
            for (int nxt = 0; nxt < N; ++nxt) {
                if (nxt == cur) continue;
                for (int kk = 0; kk < n; ++kk) {
                    LinForm f;
                    for (int r = 0; r < n; ++r)
                        if (M(r, kk) != 0.0)
                            f.emplace_back(lam[static_cast<size_t>(nxt * n + r)], M(r, kk));
                    f.emplace_back(lam[static_cast<size_t>(cur * n + kk)], -1.0);
                    fb.add_strict(f);
                }
            }
        }
    }

    auto res = fb.solve_max_margin();
    CheckResult out;
    out.margin = res.margin;
    out.lp_rows = res.rows;
    out.lp_cols = res.cols;
    out.lp_seconds = res.seconds;
    if (res.feasible) {
        Certificate cert;
        cert.kind = CertificateKind::VectorLambda;
        cert.lambda.reserve(static_cast<size_t>(N * n));
        for (int v : lam) cert.lambda.push_back(res.witness[static_cast<size_t>(v)]);
        cert.margin = res.margin;
        double rlo = kInf, rhi = 0.0;
        for (const auto& [lo, hi] : sw.intervals) {
            rlo = std::min(rlo, lo);
            rhi = std::max(rhi, hi);
        }
        cert.regime = DwellRegime::range(rlo, rhi);
        cert.variant = Variant::Primal;
        out.certificate = std::move(cert);
    }
    return out;
}

// Clock certificate form across per-mode windows: each mode carries a
// function vector on [0, T_max_i] anchored at zero, nonincreasing along
// the mode flow, coupled into every other mode across its whole window.
CheckResult range_dwell_lifted(const SwitchedSpec& sw, const Backend& backend) {
    const int N = sw.N();
    const int n = sw.n();
    for (const auto& [lo, hi] : sw.intervals) {
        (void)lo;
        if (!std::isfinite(hi))
            throw parameter_error(
                "clock certificate backends need finite dwell windows; grid the check instead");
    }
    const FnBlock::Layout layout =
        backend.kind == Backend::Kind::Pwl ? FnBlock::Layout::Pwl : FnBlock::Layout::Poly;

    FeasibilityBuilder fb;
    std::vector<FnBlock> z;
    z.reserve(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i)
        z.emplace_back(fb, "z" + std::to_string(i) + "_", n, layout, backend.param, 0.0,
                       sw.intervals[static_cast<size_t>(i)].second, true);

    for (int i = 0; i < N; ++i) {
        const Matrix& A = sw.modes[static_cast<size_t>(i)].A;
        const double hi = sw.intervals[static_cast<size_t>(i)].second;
        for (int j = 0; j < n; ++j) emit_positive_point(fb, z[static_cast<size_t>(i)].at(j, 0.0));
        for (int kk = 0; kk < n; ++kk) {
            IntervalRow row;
            row.lo = 0.0;
            row.hi = hi;
            for (int r = 0; r < n; ++r)
                if (A(r, kk) != 0.0)
                    row.terms.push_back({&z[static_cast<size_t>(i)], r, A(r, kk), false});
            row.terms.push_back({&z[static_cast<size_t>(i)], kk, 1.0, true});
            emit_interval_row(fb, row, backend);
        }
    }
    for (int cur = 0; cur < N; ++cur) {
        const auto& [lo, hi] = sw.intervals[static_cast<size_t>(cur)];
        for (int nxt = 0; nxt < N; ++nxt) {
            if (nxt == cur) continue;
            for (int r = 0; r < n; ++r) {
                if (hi > lo) {
                    IntervalRow row;
                    row.lo = lo;
                    row.hi = hi;
                    row.t_coeff = 1.0;
                    row.terms.push_back({&z[static_cast<size_t>(cur)], r, -1.0, false});
                    row.fixed = z[static_cast<size_t>(nxt)].at(r, 0.0);
                    emit_interval_row(fb, row, backend);
                } else {
                    LinForm f = z[static_cast<size_t>(nxt)].at(r, 0.0);
                    accumulate(f, z[static_cast<size_t>(cur)].at(r, lo), -1.0);
                    emit_gap_point(fb, f);
                }
            }
        }
    }

    auto res = fb.solve_max_margin();
    CheckResult out;
    out.margin = res.margin;
    out.lp_rows = res.rows;
    out.lp_cols = res.cols;
    out.lp_seconds = res.seconds;
    if (res.feasible) {
        Certificate cert;
        cert.margin = res.margin;
        double rlo = kInf, rhi = 0.0;
        for (const auto& [lo, hi] : sw.intervals) {
            rlo = std::min(rlo, lo);
            rhi = std::max(rhi, hi);
        }
        cert.regime = DwellRegime::range(rlo, rhi);
        cert.variant = Variant::NonSwapped;
        cert.statement = Statement::Xi;
        if (layout == FnBlock::Layout::Poly) {
            cert.kind = CertificateKind::ClockPolynomial;
            for (const auto& blk : z) cert.poly.push_back(blk.extract_poly(res.witness));
        } else {
            cert.kind = CertificateKind::ClockPiecewiseLinear;
            for (const auto& blk : z) cert.pwl.push_back(blk.extract_pwl(res.witness));
        }
        out.certificate = std::move(cert);
    }
    return out;
}

}  // namespace

CheckResult check_range_dwell_switching(const SwitchedSpec& sw, const Backend& backend) {
    sw.validate();
    require_metzler_modes(sw);
    require_intervals(sw);
    backend.validate();
    switch (backend.kind) {
        case Backend::Kind::Grid:
            return range_dwell_gridded(sw, backend.param);
        case Backend::Kind::Handelman:
        case Backend::Kind::Pwl:
            return range_dwell_lifted(sw, backend);
        case Backend::Kind::Exact:
            break;
    }
    throw parameter_error("range switching needs the grid backend or a clock certificate backend");
}

EstimateResult estimate_min_dwell_switching(const SwitchedSpec& sw, double tol,
                                            const Backend& backend, Statement statement) {
    sw.validate();
    require_metzler_modes(sw);
    if (!(tol > 0.0)) throw parameter_error("estimation tolerance must be positive");

    EstimateResult out;
    auto probe = [&](double T) {
        ++out.solves;
        return check_min_dwell_switching(sw, T, backend, statement);
    };
    const double floor_T = std::ldexp(1.0, -30);
    const double ceil_T = std::ldexp(1.0, 30);

    double lo = 0.0, hi = 0.0;
    std::optional<CheckResult> at_lo, at_hi;
    CheckResult first = probe(1.0);
    if (first.feasible()) {
        hi = 1.0;
        at_hi = first;
        while (true) {
            if (hi <= 2.0 * floor_T) {
                out.threshold = hi;
                out.feasible_side = at_hi;
                return out;
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
        lo = 1.0;
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

double estimate_switched_range_max(const SwitchedSpec& sw, int mode, int points, double tol) {
    sw.validate();
    require_intervals(sw);
    if (mode < 0 || mode >= sw.N()) throw parameter_error("mode index out of range");
    if (!(tol > 0.0)) throw parameter_error("estimation tolerance must be positive");
    const double T_min = sw.intervals[static_cast<size_t>(mode)].first;

    SwitchedSpec probe_spec = sw;
    auto ok = [&](double T_max) {
        probe_spec.intervals[static_cast<size_t>(mode)].second = T_max;
        return check_range_dwell_switching(probe_spec, Backend::grid(points)).feasible();
    };
    const double ceil_T = std::ldexp(1.0, 30);
    double norm = 0.0;
    for (const auto& m : sw.modes) norm = std::max(norm, m.A.norm_inf());
    const double overflow_T = 600.0 / (1.0 + norm);

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
                throw no_finite_threshold("no feasible window upper bound above the lower bound");
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

namespace {

SwitchedSynthesisResult synth_switching_arbitrary(const SwitchedSpec& sw, bool common_gain) {
    const int N = sw.N();
    const int n = sw.n();
    const int m = sw.m();

    FeasibilityBuilder fb;
    const int alpha = fb.add_variable("alpha", 0.0, 1e6);
    std::vector<int> x(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        x[static_cast<size_t>(j)] = fb.add_variable("x" + std::to_string(j));
        fb.require_positive(x[static_cast<size_t>(j)]);
    }
    const int blocks = common_gain ? 1 : N;
    std::vector<int> u(static_cast<size_t>(blocks * m * n));
    for (int b = 0; b < blocks; ++b)
        for (int k = 0; k < m; ++k)
            for (int j = 0; j < n; ++j)
                u[static_cast<size_t>((b * m + k) * n + j)] = fb.add_variable(
                    "u" + std::to_string(b) + "_" + std::to_string(k) + "_" + std::to_string(j));

    const auto entry = [&](int mode, int i, int j) {
        const int b = common_gain ? 0 : mode;
        LinForm f;
        const Matrix& A = sw.modes[static_cast<size_t>(mode)].A;
        if (A(i, j) != 0.0) f.emplace_back(x[static_cast<size_t>(j)], A(i, j));
        for (int k = 0; k < m; ++k) {
            const double w = (*sw.modes[static_cast<size_t>(mode)].B)(i, k);
            if (w != 0.0) f.emplace_back(u[static_cast<size_t>((b * m + k) * n + j)], w);
        }
        return f;
    };
    for (int mode = 0; mode < N; ++mode) {
        for (int i = 0; i < n; ++i) {
            LinForm row_sum;
            for (int j = 0; j < n; ++j) {
                LinForm f = entry(mode, i, j);
                accumulate(row_sum, f);
                if (i == j) f.emplace_back(alpha, 1.0);
                if (!f.empty()) fb.add_leq(negated(f), 0.0);
            }
            fb.add_strict(row_sum);
        }
    }

    auto res = fb.solve_max_margin();
    SwitchedSynthesisResult out;
    out.margin = res.margin;
    out.lp_rows = res.rows;
    out.lp_cols = res.cols;
    out.lp_seconds = res.seconds;
    if (!res.feasible) return out;

    std::vector<double> xv(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j)
        xv[static_cast<size_t>(j)] = res.witness[static_cast<size_t>(x[static_cast<size_t>(j)])];
    for (int mode = 0; mode < N; ++mode) {
        const int b = common_gain ? 0 : mode;
        Controller k;
        k.a = 0.0;
        k.b = 0.0;
        for (int j = 0; j < n; ++j) k.Kc_den.push_back(Poly::constant(xv[static_cast<size_t>(j)]));
        k.Kc_num.assign(static_cast<size_t>(m), {});
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                k.Kc_num[static_cast<size_t>(i)].push_back(Poly::constant(
                    res.witness[static_cast<size_t>(u[static_cast<size_t>((b * m + i) * n + j)])]));
        out.controllers.push_back(std::move(k));
    }

    Certificate cert;
    cert.kind = CertificateKind::VectorLambda;
    cert.lambda = std::move(xv);
    cert.margin = res.margin;
    cert.regime = DwellRegime::arbitrary();
    cert.variant = Variant::Dual;
    out.certificate = std::move(cert);
    return out;
}

// Timed switched synthesis. For a minimum dwell every certificate lives on
// [0, T] and is anchored at T; for per-mode windows each lives on
// [0, T_max_i] anchored at zero, with the coupling swept across the window.
SwitchedSynthesisResult synth_switching_timed(const SwitchedSpec& sw, const DwellRegime& regime,
                                              const Backend& backend) {
    if (backend.kind != Backend::Kind::Handelman)
        throw parameter_error(
            "timed gain synthesis supports only the handelman backend; its degree sets the "
            "certificate polynomial degree");
    const int N = sw.N();
    const int n = sw.n();
    const int m = sw.m();
    const bool minimum = regime.kind == RegimeKind::Minimum;
    if (!minimum) {
        require_intervals(sw);
        for (const auto& [lo, hi] : sw.intervals) {
            (void)lo;
            if (!std::isfinite(hi)) throw parameter_error("gain synthesis needs a finite dwell bound");
        }
    }
    const auto span = [&](int mode) {
        return minimum ? regime.T : sw.intervals[static_cast<size_t>(mode)].second;
    };
    const int deriv_sign = minimum ? -1 : +1;
    const int d = backend.param;

    FeasibilityBuilder fb;
    const int alpha = fb.add_variable("alpha", 0.0, 1e6);
    std::vector<FnBlock> X;
    std::vector<FnBlock> U;
    X.reserve(static_cast<size_t>(N));
    U.reserve(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
        X.emplace_back(fb, "x" + std::to_string(i) + "_", n, FnBlock::Layout::Poly, d, 0.0, span(i));
        U.emplace_back(fb, "u" + std::to_string(i) + "_", m * n, FnBlock::Layout::Poly, d, 0.0,
                       span(i));
    }

    for (int mode = 0; mode < N; ++mode) {
        const Matrix& A = sw.modes[static_cast<size_t>(mode)].A;
        const Matrix& B = *sw.modes[static_cast<size_t>(mode)].B;
        const double L = span(mode);
        FnBlock& Xi = X[static_cast<size_t>(mode)];
        FnBlock& Ui = U[static_cast<size_t>(mode)];
        // Closed flow Metzler up to the alpha shift across the clock.
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                IntervalRow r;
                r.lo = 0.0;
                r.hi = L;
                if (A(i, j) != 0.0) r.terms.push_back({&Xi, j, -A(i, j), false});
                for (int k = 0; k < m; ++k)
                    if (B(i, k) != 0.0) r.terms.push_back({&Ui, k * n + j, -B(i, k), false});
                if (i == j) r.fixed.emplace_back(alpha, -1.0);
                if (r.terms.empty()) continue;
                emit_interval_row(fb, r, backend);
            }
        // Strict flow decrease row sums.
        for (int i = 0; i < n; ++i) {
            IntervalRow r;
            r.lo = 0.0;
            r.hi = L;
            r.strict_scaled = true;
            r.terms.push_back({&Xi, i, static_cast<double>(deriv_sign), true});
            for (int j = 0; j < n; ++j) {
                if (A(i, j) != 0.0) r.terms.push_back({&Xi, j, A(i, j), false});
                for (int k = 0; k < m; ++k)
                    if (B(i, k) != 0.0) r.terms.push_back({&Ui, k * n + j, B(i, k), false});
            }
            emit_interval_row(fb, r, backend);
        }
        // Minimum dwell holds the endpoint gain, so its flow must still
        // decrease there on its own.
        if (minimum)
            for (int i = 0; i < n; ++i) {
                LinForm f;
                for (int j = 0; j < n; ++j) {
                    if (A(i, j) != 0.0) accumulate(f, Xi.at(j, L), A(i, j));
                    for (int k = 0; k < m; ++k)
                        if (B(i, k) != 0.0) accumulate(f, Ui.at(k * n + j, L), B(i, k));
                }
                emit_strict_point(fb, f);
            }
        // Diagonal certificate bounded away from zero along the clock.
        for (int j = 0; j < n; ++j) {
            IntervalRow r;
            r.lo = 0.0;
            r.hi = L;
            r.t_coeff = 1.0;
            r.terms.push_back({&Xi, j, -1.0, false});
            emit_interval_row(fb, r, backend);
        }
    }
    // Coupling across ordered mode pairs: leaving the current mode and
    // entering the next must not grow the diagonal certificate.
    for (int cur = 0; cur < N; ++cur)
        for (int nxt = 0; nxt < N; ++nxt) {
            if (cur == nxt) continue;
            if (minimum) {
                for (int r = 0; r < n; ++r) {
                    LinForm f = X[static_cast<size_t>(nxt)].at(r, regime.T);
                    accumulate(f, X[static_cast<size_t>(cur)].at(r, 0.0), -1.0);
                    emit_gap_point(fb, f);
                }
            } else {
                const auto& [lo, hi] = sw.intervals[static_cast<size_t>(cur)];
                for (int r = 0; r < n; ++r) {
                    if (hi > lo) {
                        IntervalRow row;
                        row.lo = lo;
                        row.hi = hi;
                        row.t_coeff = 1.0;
                        row.terms.push_back({&X[static_cast<size_t>(cur)], r, -1.0, false});
                        row.fixed = X[static_cast<size_t>(nxt)].at(r, 0.0);
                        emit_interval_row(fb, row, backend);
                    } else {
                        LinForm f = X[static_cast<size_t>(nxt)].at(r, 0.0);
                        accumulate(f, X[static_cast<size_t>(cur)].at(r, lo), -1.0);
                        emit_gap_point(fb, f);
                    }
                }
            }
        }

    auto res = fb.solve_max_margin();
    SwitchedSynthesisResult out;
    out.margin = res.margin;
    out.lp_rows = res.rows;
    out.lp_cols = res.cols;
    out.lp_seconds = res.seconds;
    if (!res.feasible) return out;

    Certificate cert;
    cert.kind = CertificateKind::ClockPolynomial;
    cert.margin = res.margin;
    cert.regime = regime;
    if (minimum) {
        cert.statement = Statement::Zeta;  // anchored at T
    } else {
        cert.statement = Statement::Xi;  // anchored at 0
        double rlo = kInf, rhi = 0.0;
        for (const auto& [lo, hi] : sw.intervals) {
            rlo = std::min(rlo, lo);
            rhi = std::max(rhi, hi);
        }
        cert.regime = DwellRegime::range(rlo, rhi);
    }
    cert.variant = Variant::NonSwapped;

    for (int mode = 0; mode < N; ++mode) {
        ClockPolyVec xs = X[static_cast<size_t>(mode)].extract_poly(res.witness);
        ClockPolyVec us = U[static_cast<size_t>(mode)].extract_poly(res.witness);
        Controller k;
        k.a = 0.0;
        k.b = span(mode);
        if (minimum) k.hold_at = regime.T;
        k.Kc_den = xs.entries;
        k.Kc_num.assign(static_cast<size_t>(m), {});
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                k.Kc_num[static_cast<size_t>(i)].push_back(us.entries[static_cast<size_t>(i * n + j)]);
        cert.poly.push_back(std::move(xs));
        out.controllers.push_back(std::move(k));
    }
    out.certificate = std::move(cert);
    return out;
}

}  // namespace

SwitchedSynthesisResult synth_switching(const SwitchedSpec& sw, const DwellRegime& regime,
                                        const Backend& backend, bool common_gain) {
    sw.validate();
    regime.validate();
    backend.validate();
    if (sw.m() == 0) throw parameter_error("gain synthesis needs mode input matrices");
    switch (regime.kind) {
        case RegimeKind::Arbitrary:
            return synth_switching_arbitrary(sw, common_gain);
        case RegimeKind::Minimum:
        case RegimeKind::Range:
            if (common_gain)
                throw parameter_error("a common gain is only available under arbitrary switching");
            return synth_switching_timed(sw, regime, backend);
        case RegimeKind::Constant:
        case RegimeKind::Maximum:
            break;
    }
    throw parameter_error(
        "switched synthesis covers arbitrary switching, a minimum dwell, and dwell windows");
}

namespace {

Matrix closed_mode_flow(const SwitchedMode& mode, const Controller& k, double tau) {
    if (mode.B && k.mc() > 0) return mode.A + (*mode.B) * k.Kc_eval(tau);
    return mode.A;
}

SystemSpec mode_as_impulsive(const SwitchedMode& mode) {
    SystemSpec s;
    s.A = mode.A;
    s.J = Matrix::identity(mode.A.rows());
    s.B_c = mode.B;
    return s;
}

}  // namespace

VerifyReport verify_switched_closed_loop(const SwitchedSpec& sw, const DwellRegime& regime,
                                         const std::vector<Controller>& gains) {
    sw.validate();
    regime.validate();
    const int N = sw.N();
    const int n = sw.n();
    if (static_cast<int>(gains.size()) != N)
        throw dimension_error("one controller per mode is required");
    for (const auto& k : gains) {
        if (k.n() != n) throw dimension_error("controller state dimension does not match the plant");
        if (sw.m() > 0 && k.mc() > 0 && k.mc() != sw.m())
            throw dimension_error("flow gain row count does not match the input column count");
    }
    if (regime.kind == RegimeKind::Constant || regime.kind == RegimeKind::Maximum)
        throw parameter_error(
            "switched verification covers arbitrary switching, a minimum dwell, and dwell windows");
    if (regime.kind == RegimeKind::Range) {
        require_intervals(sw);
        for (const auto& [lo, hi] : sw.intervals) {
            (void)lo;
            if (!std::isfinite(hi))
                throw parameter_error(
                    "closed-loop audit over an unbounded dwell window is not supported");
        }
    }

    VerifyReport rep;
    std::vector<std::string> notes;
    const double kPosTol = 1e-9;

    rep.min_denominator = std::numeric_limits<double>::infinity();
    rep.denom_ok = true;
    rep.metzler_ok = true;
    rep.jump_nonneg_ok = true;  // switched plants keep the state continuous
    for (int mode = 0; mode < N; ++mode) {
        const Controller& k = gains[static_cast<size_t>(mode)];
        const int S = k.b > k.a ? 1001 : 1;
        for (int q = 0; q < S; ++q) {
            const double tau = S > 1 ? k.a + (k.b - k.a) * q / (S - 1) : k.a;
            for (const auto& den : k.Kc_den)
                rep.min_denominator = std::min(rep.min_denominator, den(tau));
        }
    }
    if (rep.min_denominator <= 0.0) {
        rep.denom_ok = false;
        rep.detail = "a gain denominator is not positive on the clock window";
        return rep;
    }
    double worst_off = 0.0;
    for (int mode = 0; mode < N; ++mode) {
        const Controller& k = gains[static_cast<size_t>(mode)];
        const int S = k.b > k.a ? 1001 : 1;
        for (int q = 0; q < S; ++q) {
            const double tau = S > 1 ? k.a + (k.b - k.a) * q / (S - 1) : k.a;
            const Matrix M = closed_mode_flow(sw.modes[static_cast<size_t>(mode)], k, tau);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j) worst_off = std::min(worst_off, M(i, j));
        }
    }
    if (worst_off < -kPosTol) {
        rep.metzler_ok = false;
        notes.push_back("a closed mode flow loses the Metzler property (worst off-diagonal " +
                        std::to_string(worst_off) + ")");
    }

    // Dwell lengths per mode whose transition maps feed the coupling rows.
    std::vector<std::vector<double>> thetas(static_cast<size_t>(N));
    if (regime.kind == RegimeKind::Minimum)
        for (int mode = 0; mode < N; ++mode) thetas[static_cast<size_t>(mode)] = {regime.T};
    if (regime.kind == RegimeKind::Range)
        for (int mode = 0; mode < N; ++mode) {
            const auto& [lo, hi] = sw.intervals[static_cast<size_t>(mode)];
            const int Q = hi > lo ? 101 : 1;
            for (int q = 0; q < Q; ++q)
                thetas[static_cast<size_t>(mode)].push_back(Q > 1 ? lo + (hi - lo) * q / (Q - 1)
                                                                  : lo);
        }

    std::vector<std::vector<Matrix>> Psi(static_cast<size_t>(N));
    bool converged = true;
    if (regime.kind != RegimeKind::Arbitrary) {
        try {
            for (int mode = 0; mode < N; ++mode) {
                const SystemSpec si = mode_as_impulsive(sw.modes[static_cast<size_t>(mode)]);
                const Controller& k = gains[static_cast<size_t>(mode)];
                const auto& ts = thetas[static_cast<size_t>(mode)];
                const double span = ts.back();
                const auto compute = [&](int base) {
                    std::vector<Matrix> out;
                    out.reserve(ts.size());
                    for (double th : ts) {
                        const int steps = std::max(1, static_cast<int>(std::ceil(base * th / span)));
                        out.push_back(closed_transition(si, k, th, steps));
                    }
                    return out;
                };
                int steps = 2000;
                auto coarse = compute(steps);
                bool mode_ok = false;
                for (int r = 0; r < 8 && !mode_ok; ++r) {
                    steps *= 2;
                    auto fine = compute(steps);
                    double delta = 0.0;
                    for (size_t q = 0; q < coarse.size(); ++q) {
                        const double scale = std::max(1.0, fine[q].norm_inf());
                        delta = std::max(delta, (coarse[q] - fine[q]).norm_inf() / scale);
                    }
                    coarse = std::move(fine);
                    rep.integration_error = std::max(rep.integration_error, delta);
                    mode_ok = delta < 1e-8;
                }
                if (!mode_ok) converged = false;
                Psi[static_cast<size_t>(mode)] = std::move(coarse);
            }
            if (!converged) notes.push_back("transition map integration did not converge");
        } catch (const error& e) {
            converged = false;
            notes.push_back(std::string("transition map integration failed: ") + e.what());
        }
    }

    if (converged) {
        FeasibilityBuilder fb;
        const int vars = regime.kind == RegimeKind::Arbitrary ? n : N * n;
        std::vector<int> lam(static_cast<size_t>(vars));
        for (int j = 0; j < vars; ++j) {
            lam[static_cast<size_t>(j)] = fb.add_variable("l" + std::to_string(j));
            fb.require_positive(lam[static_cast<size_t>(j)]);
        }
        if (regime.kind == RegimeKind::Arbitrary) {
            for (int mode = 0; mode < N; ++mode) {
                const Matrix M = closed_mode_flow(sw.modes[static_cast<size_t>(mode)],
                                                  gains[static_cast<size_t>(mode)],
                                                  gains[static_cast<size_t>(mode)].a);
                for (int i = 0; i < n; ++i) {
                    LinForm f;
                    for (int j = 0; j < n; ++j)
                        if (M(i, j) != 0.0) f.emplace_back(lam[static_cast<size_t>(j)], M(i, j));
                    fb.add_strict(f);
                }
            }
        } else {
            if (regime.kind == RegimeKind::Minimum)
                for (int mode = 0; mode < N; ++mode) {
                    const Matrix M = closed_mode_flow(sw.modes[static_cast<size_t>(mode)],
                                                      gains[static_cast<size_t>(mode)], regime.T);
                    for (int i = 0; i < n; ++i) {
                        LinForm f;
                        for (int j = 0; j < n; ++j)
                            if (M(i, j) != 0.0)
                                f.emplace_back(lam[static_cast<size_t>(mode * n + j)], M(i, j));
                        fb.add_strict(f);
                    }
                }
            for (int cur = 0; cur < N; ++cur)
                for (int nxt = 0; nxt < N; ++nxt) {
                    if (cur == nxt) continue;
                    for (const Matrix& M : Psi[static_cast<size_t>(cur)])
                        for (int i = 0; i < n; ++i) {
                            LinForm f;
                            for (int j = 0; j < n; ++j)
                                if (M(i, j) != 0.0)
                                    f.emplace_back(lam[static_cast<size_t>(nxt * n + j)], M(i, j));
                            f.emplace_back(lam[static_cast<size_t>(cur * n + i)], -1.0);
                            fb.add_strict(f);
                        }
                }
        }
        auto res = fb.solve_max_margin();
        rep.lp_margin = res.margin;
        rep.lp_ok = res.feasible;
        if (!rep.lp_ok) notes.push_back("no positive vectors certify the closed-loop decay");
    }

    rep.pass = rep.metzler_ok && rep.jump_nonneg_ok && rep.denom_ok && rep.lp_ok && converged;
    if (notes.empty()) {
        rep.detail = "ok";
    } else {
        rep.detail = notes.front();
        for (size_t i = 1; i < notes.size(); ++i) rep.detail += "; " + notes[i];
    }
    return rep;
}

}  // namespace posidwell
