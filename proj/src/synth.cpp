#include "posidwell/synth.hpp"

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

LinForm negated(LinForm form) {
    for (auto& t : form) t.second = -t.second;
    return form;
}

std::string entry_name(const char* prefix, int i, int j) {
    return std::string(prefix) + std::to_string(i) + "_" + std::to_string(j);
}

}  // namespace

Matrix Controller::Kc_eval(double tau) const {
    const int nn = n();
    const int m = mc();
    const double u = std::clamp(tau, a, b);
    Matrix K(m, nn);
    for (int j = 0; j < nn; ++j) {
        const double den = Kc_den[static_cast<size_t>(j)](u);
        if (!(den > 0.0))
            throw domain_error("controller denominator is not positive at the requested clock time");
        for (int i = 0; i < m; ++i)
            K(i, j) = Kc_num[static_cast<size_t>(i)][static_cast<size_t>(j)](u) / den;
    }
    return K;
}

Matrix Controller::Kd_eval(double theta) const {
    if (!Kd_num) return Kd;
    const int nn = n();
    const int m = static_cast<int>(Kd_num->size());
    double u = theta;
    if (Kd_interval) u = std::clamp(theta, Kd_interval->first, Kd_interval->second);
    Matrix K(m, nn);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < nn; ++j)
            K(i, j) = (*Kd_num)[static_cast<size_t>(i)][static_cast<size_t>(j)](u);
    return K;
}

SynthesisResult synth_arbitrary(const SystemSpec& s) {
    s.validate();
    const int n = s.n();
    const int mc = s.mc();
    const int md = s.md();
    const Matrix& A = s.A;
    const Matrix& J = s.J;

    FeasibilityBuilder fb;
    const int alpha = fb.add_variable("alpha", 0.0, 1e6);
    std::vector<int> x(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        x[static_cast<size_t>(j)] = fb.add_variable("x" + std::to_string(j));
        fb.require_positive(x[static_cast<size_t>(j)]);
    }
    std::vector<int> uc(static_cast<size_t>(mc * n));
    for (int k = 0; k < mc; ++k)
        for (int j = 0; j < n; ++j)
            uc[static_cast<size_t>(k * n + j)] = fb.add_variable(entry_name("uc", k, j));
    std::vector<int> ud(static_cast<size_t>(md * n));
    for (int k = 0; k < md; ++k)
        for (int j = 0; j < n; ++j)
            ud[static_cast<size_t>(k * n + j)] = fb.add_variable(entry_name("ud", k, j));

    // Column j of the closed maps scaled by the diagonal certificate:
    // [A X + B_c U]_{ij} and [J X + B_d U_d]_{ij} as linear forms.
    const auto flow_entry = [&](int i, int j) {
        LinForm f;
        if (A(i, j) != 0.0) f.emplace_back(x[static_cast<size_t>(j)], A(i, j));
        for (int k = 0; k < mc; ++k) {
            const double w = (*s.B_c)(i, k);
            if (w != 0.0) f.emplace_back(uc[static_cast<size_t>(k * n + j)], w);
        }
        return f;
    };
    const auto jump_entry = [&](int i, int j) {
        LinForm f;
        if (J(i, j) != 0.0) f.emplace_back(x[static_cast<size_t>(j)], J(i, j));
        for (int k = 0; k < md; ++k) {
            const double w = (*s.B_d)(i, k);
            if (w != 0.0) f.emplace_back(ud[static_cast<size_t>(k * n + j)], w);
        }
        return f;
    };

    // Closed flow Metzler up to the alpha shift, closed jump nonnegative.
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            LinForm f = flow_entry(i, j);
            if (i == j) f.emplace_back(alpha, 1.0);
            if (!f.empty()) fb.add_leq(negated(f), 0.0);
            LinForm g = jump_entry(i, j);
            if (!g.empty()) fb.add_leq(negated(g), 0.0);
        }
    // Strict row sums: flow decrease and jump contraction.
    for (int i = 0; i < n; ++i) {
        LinForm flow;
        LinForm jump;
        for (int j = 0; j < n; ++j) {
            accumulate(flow, flow_entry(i, j));
            accumulate(jump, jump_entry(i, j));
        }
        jump.emplace_back(x[static_cast<size_t>(i)], -1.0);
        fb.add_strict(flow);
        fb.add_strict(jump);
    }

    auto res = fb.solve_max_margin();
    SynthesisResult out;
    out.margin = res.margin;
    out.lp_rows = res.rows;
    out.lp_cols = res.cols;
    out.lp_seconds = res.seconds;
    if (!res.feasible) return out;

    Controller k;
    k.a = 0.0;
    k.b = 0.0;
    k.Kc_den.reserve(static_cast<size_t>(n));
    std::vector<double> xv(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        xv[static_cast<size_t>(j)] = res.witness[static_cast<size_t>(x[static_cast<size_t>(j)])];
        k.Kc_den.push_back(Poly::constant(xv[static_cast<size_t>(j)]));
    }
    k.Kc_num.assign(static_cast<size_t>(mc), {});
    for (int i = 0; i < mc; ++i)
        for (int j = 0; j < n; ++j)
            k.Kc_num[static_cast<size_t>(i)].push_back(
                Poly::constant(res.witness[static_cast<size_t>(uc[static_cast<size_t>(i * n + j)])]));
    k.Kd = md > 0 ? Matrix(md, n) : Matrix();
    for (int i = 0; i < md; ++i)
        for (int j = 0; j < n; ++j)
            k.Kd(i, j) = res.witness[static_cast<size_t>(ud[static_cast<size_t>(i * n + j)])] /
                         xv[static_cast<size_t>(j)];

    Certificate cert;
    cert.kind = CertificateKind::VectorLambda;
    cert.lambda = xv;
    cert.margin = res.margin;
    cert.regime = DwellRegime::arbitrary();
    cert.variant = Variant::Dual;

    out.controller = std::move(k);
    out.certificate = std::move(cert);
    return out;
}

namespace {

// Anchors and signs that distinguish the timed synthesis programs. The
// certificate lives on [0, L]; jump rows read X at jump_at, the contraction
// row compares against X at ref_at, and anchor_sign adds a strict sign
// condition on the closed flow rows at L.
struct TimedLayout {
    double L = 0.0;
    double jump_at = 0.0;
    double pos_at = 0.0;
    double ref_at = 0.0;
    int deriv_sign = -1;
    int anchor_sign = 0;
};

SynthesisResult synth_timed(const SystemSpec& s, const DwellRegime& regime, const Backend& backend,
                            const TimedLayout& lay, bool scheduled_jump) {
    s.validate();
    regime.validate();
    backend.validate();
    if (backend.kind != Backend::Kind::Handelman)
        throw parameter_error(
            "timed gain synthesis supports only the handelman backend; its degree sets the "
            "certificate polynomial degree");
    const int n = s.n();
    const int mc = s.mc();
    const int md = s.md();
    const Matrix& A = s.A;
    const Matrix& J = s.J;
    const double L = lay.L;
    if (!std::isfinite(L)) throw parameter_error("gain synthesis needs a finite dwell bound");
    const bool range = regime.kind == RegimeKind::Range;
    const bool degenerate_range = range && regime.T_min == regime.T_max;
    if (scheduled_jump && !range)
        throw parameter_error("a dwell-scheduled jump gain needs a dwell range");
    if (scheduled_jump && degenerate_range)
        throw parameter_error("a dwell-scheduled jump gain needs T_min < T_max");
    const int d = backend.param;

    FeasibilityBuilder fb;
    const int alpha = fb.add_variable("alpha", 0.0, 1e6);
    FnBlock X(fb, "x", n, FnBlock::Layout::Poly, d, 0.0, L);
    std::optional<FnBlock> U;
    if (mc > 0) U.emplace(fb, "u", mc * n, FnBlock::Layout::Poly, d, 0.0, L);
    std::optional<FnBlock> Ud;
    std::vector<int> ud;
    if (md > 0) {
        if (scheduled_jump) {
            Ud.emplace(fb, "ud", md * n, FnBlock::Layout::Poly, d, regime.T_min, regime.T_max);
        } else {
            ud.resize(static_cast<size_t>(md * n));
            for (int k = 0; k < md; ++k)
                for (int j = 0; j < n; ++j)
                    ud[static_cast<size_t>(k * n + j)] = fb.add_variable(entry_name("ud", k, j));
        }
    }

    // Closed flow Metzler up to the alpha shift, for every clock value.
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            IntervalRow r;
            r.lo = 0.0;
            r.hi = L;
            if (A(i, j) != 0.0) r.terms.push_back({&X, j, -A(i, j), false});
            for (int k = 0; k < mc; ++k) {
                const double w = (*s.B_c)(i, k);
                if (w != 0.0) r.terms.push_back({&*U, k * n + j, -w, false});
            }
            if (i == j) r.fixed.emplace_back(alpha, -1.0);
            if (r.terms.empty()) continue;  // either 0 >= 0 or alpha >= 0
            emit_interval_row(fb, r, backend);
        }

    // Strict flow decrease row sums, with the clock derivative of X.
    for (int i = 0; i < n; ++i) {
        IntervalRow r;
        r.lo = 0.0;
        r.hi = L;
        r.strict_scaled = true;
        r.terms.push_back({&X, i, static_cast<double>(lay.deriv_sign), true});
        for (int j = 0; j < n; ++j) {
            if (A(i, j) != 0.0) r.terms.push_back({&X, j, A(i, j), false});
            for (int k = 0; k < mc; ++k) {
                const double w = (*s.B_c)(i, k);
                if (w != 0.0) r.terms.push_back({&*U, k * n + j, w, false});
            }
        }
        emit_interval_row(fb, r, backend);
    }

    // Closed jump map nonnegative entrywise.
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            LinForm fixed;
            if (J(i, j) != 0.0) accumulate(fixed, X.at(j, lay.jump_at), J(i, j));
            if (scheduled_jump) {
                IntervalRow r;
                r.lo = regime.T_min;
                r.hi = regime.T_max;
                for (int k = 0; k < md; ++k) {
                    const double w = (*s.B_d)(i, k);
                    if (w != 0.0) r.terms.push_back({&*Ud, k * n + j, -w, false});
                }
                r.fixed = negated(fixed);
                if (r.terms.empty()) {
                    if (!r.fixed.empty()) fb.add_leq(r.fixed, 0.0);
                    continue;
                }
                emit_interval_row(fb, r, backend);
            } else {
                LinForm f = fixed;
                for (int k = 0; k < md; ++k) {
                    const double w = (*s.B_d)(i, k);
                    if (w != 0.0) f.emplace_back(ud[static_cast<size_t>(k * n + j)], w);
                }
                if (f.empty()) continue;
                fb.add_leq(negated(f), 0.0);
            }
        }

    // Jump contraction with a unit gap: closed jump row sums stay below the
    // reference diagonal. For a dwell range the reference sweeps the window.
    for (int i = 0; i < n; ++i) {
        LinForm base;
        for (int j = 0; j < n; ++j)
            if (J(i, j) != 0.0) accumulate(base, X.at(j, lay.jump_at), J(i, j));
        if (md > 0 && !scheduled_jump)
            for (int k = 0; k < md; ++k) {
                const double w = (*s.B_d)(i, k);
                if (w == 0.0) continue;
                for (int j = 0; j < n; ++j)
                    base.emplace_back(ud[static_cast<size_t>(k * n + j)], w);
            }
        if (!range || degenerate_range) {
            LinForm f = base;
            accumulate(f, X.at(i, range ? regime.T_min : lay.ref_at), -1.0);
            emit_gap_point(fb, f);
        } else {
            IntervalRow r;
            r.lo = regime.T_min;
            r.hi = regime.T_max;
            r.t_coeff = 1.0;
            r.terms.push_back({&X, i, -1.0, false});
            if (scheduled_jump)
                for (int k = 0; k < md; ++k) {
                    const double w = (*s.B_d)(i, k);
                    if (w == 0.0) continue;
                    for (int j = 0; j < n; ++j) r.terms.push_back({&*Ud, k * n + j, w, false});
                }
            r.fixed = base;
            emit_interval_row(fb, r, backend);
        }
    }

    // Strict sign of the closed flow row sums at the endpoint, which caps
    // (minimum dwell) or floors (maximum dwell) the behavior beyond it.
    if (lay.anchor_sign != 0)
        for (int i = 0; i < n; ++i) {
            LinForm f;
            for (int j = 0; j < n; ++j) {
                if (A(i, j) != 0.0) accumulate(f, X.at(j, L), A(i, j));
                for (int k = 0; k < mc; ++k) {
                    const double w = (*s.B_c)(i, k);
                    if (w != 0.0) accumulate(f, U->at(k * n + j, L), w);
                }
            }
            if (lay.anchor_sign > 0) f = negated(f);
            emit_strict_point(fb, f);
        }

    // Diagonal certificate bounded away from zero on the whole clock window,
    // which also keeps every gain denominator positive.
    for (int j = 0; j < n; ++j) {
        IntervalRow r;
        r.lo = 0.0;
        r.hi = L;
        r.t_coeff = 1.0;
        r.terms.push_back({&X, j, -1.0, false});
        emit_interval_row(fb, r, backend);
    }

    auto res = fb.solve_max_margin();
    SynthesisResult out;
    out.margin = res.margin;
    out.lp_rows = res.rows;
    out.lp_cols = res.cols;
    out.lp_seconds = res.seconds;
    if (!res.feasible) return out;

    ClockPolyVec xs = X.extract_poly(res.witness);
    Controller k;
    k.a = 0.0;
    k.b = L;
    if (regime.kind == RegimeKind::Minimum) k.hold_at = L;
    k.Kc_den = xs.entries;
    if (mc > 0) {
        ClockPolyVec us = U->extract_poly(res.witness);
        k.Kc_num.assign(static_cast<size_t>(mc), {});
        for (int i = 0; i < mc; ++i)
            for (int j = 0; j < n; ++j)
                k.Kc_num[static_cast<size_t>(i)].push_back(us.entries[static_cast<size_t>(i * n + j)]);
    }
    k.Kd = md > 0 ? Matrix(md, n) : Matrix();
    if (md > 0) {
        std::vector<double> xe(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) xe[static_cast<size_t>(j)] = xs.entries[static_cast<size_t>(j)](lay.jump_at);
        if (scheduled_jump) {
            ClockPolyVec uds = Ud->extract_poly(res.witness);
            std::vector<std::vector<Poly>> num(static_cast<size_t>(md));
            for (int i = 0; i < md; ++i)
                for (int j = 0; j < n; ++j)
                    num[static_cast<size_t>(i)].push_back(
                        (1.0 / xe[static_cast<size_t>(j)]) * uds.entries[static_cast<size_t>(i * n + j)]);
            for (int i = 0; i < md; ++i)
                for (int j = 0; j < n; ++j)
                    k.Kd(i, j) = num[static_cast<size_t>(i)][static_cast<size_t>(j)](regime.T_min);
            k.Kd_num = std::move(num);
            k.Kd_interval = std::make_pair(regime.T_min, regime.T_max);
        } else {
            for (int i = 0; i < md; ++i)
                for (int j = 0; j < n; ++j)
                    k.Kd(i, j) = res.witness[static_cast<size_t>(ud[static_cast<size_t>(i * n + j)])] /
                                 xe[static_cast<size_t>(j)];
        }
    }

    Certificate cert;
    cert.kind = CertificateKind::ClockPolynomial;
    cert.poly = {xs};
    cert.margin = res.margin;
    cert.regime = regime;
    cert.statement = lay.deriv_sign < 0 ? Statement::Zeta : Statement::Xi;
    if (*cert.statement == Statement::Zeta)
        cert.variant = lay.pos_at == L ? Variant::NonSwapped : Variant::Swapped;
    else
        cert.variant = lay.pos_at == 0.0 ? Variant::NonSwapped : Variant::Swapped;

    out.controller = std::move(k);
    out.certificate = std::move(cert);
    return out;
}

}  // namespace

SynthesisResult synth_constant(const SystemSpec& s, double T, const Backend& backend,
                               bool reverse) {
    TimedLayout lay;
    lay.L = T;
    if (!reverse) {
        lay.jump_at = T;
        lay.pos_at = 0.0;
        lay.ref_at = 0.0;
        lay.deriv_sign = -1;
    } else {
        lay.jump_at = 0.0;
        lay.pos_at = T;
        lay.ref_at = T;
        lay.deriv_sign = +1;
    }
    return synth_timed(s, DwellRegime::constant(T), backend, lay, false);
}

SynthesisResult synth_minimum(const SystemSpec& s, double T, const Backend& backend) {
    TimedLayout lay;
    lay.L = T;
    lay.jump_at = T;
    lay.pos_at = T;
    lay.ref_at = 0.0;
    lay.deriv_sign = -1;
    lay.anchor_sign = -1;
    return synth_timed(s, DwellRegime::minimum(T), backend, lay, false);
}

SynthesisResult synth_maximum(const SystemSpec& s, double T, const Backend& backend) {
    TimedLayout lay;
    lay.L = T;
    lay.jump_at = 0.0;
    lay.pos_at = T;
    lay.ref_at = T;
    lay.deriv_sign = +1;
    lay.anchor_sign = +1;
    return synth_timed(s, DwellRegime::maximum(T), backend, lay, false);
}

SynthesisResult synth_range(const SystemSpec& s, double T_min, double T_max,
                            const Backend& backend, bool scheduled_jump) {
    TimedLayout lay;
    lay.L = T_max;
    lay.jump_at = 0.0;
    lay.pos_at = 0.0;
    lay.deriv_sign = +1;
    return synth_timed(s, DwellRegime::range(T_min, T_max), backend, lay, scheduled_jump);
}

namespace {

Matrix closed_flow(const SystemSpec& s, const Controller& k, double tau) {
    if (s.mc() > 0 && k.mc() > 0) return s.A + (*s.B_c) * k.Kc_eval(tau);
    return s.A;
}

Matrix closed_jump(const SystemSpec& s, const Controller& k, double theta) {
    if (s.md() > 0 && k.md() > 0) return s.J + (*s.B_d) * k.Kd_eval(theta);
    return s.J;
}

}  // namespace

Matrix closed_transition(const SystemSpec& s, const Controller& k, double length, int steps) {
    Matrix Phi = Matrix::identity(s.n());
    const double h = length / steps;
    for (int i = 0; i < steps; ++i) {
        const double t0 = i * h;
        const Matrix A1 = closed_flow(s, k, t0);
        const Matrix A2 = closed_flow(s, k, t0 + 0.5 * h);
        const Matrix A4 = closed_flow(s, k, t0 + h);
        const Matrix k1 = A1 * Phi;
        const Matrix k2 = A2 * (Phi + 0.5 * h * k1);
        const Matrix k3 = A2 * (Phi + 0.5 * h * k2);
        const Matrix k4 = A4 * (Phi + h * k3);
        Phi = Phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return Phi;
}

namespace {

struct StabilityRows {
    std::vector<Matrix> flows_neg;  // M lambda < 0
    std::vector<Matrix> flows_pos;  // M lambda > 0
    std::vector<Matrix> maps;       // (M - I) lambda < 0
};

bool vector_stability(const StabilityRows& rows, int n, double& margin) {
    FeasibilityBuilder fb;
    std::vector<int> lam(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        lam[static_cast<size_t>(j)] = fb.add_variable("l" + std::to_string(j));
        fb.require_positive(lam[static_cast<size_t>(j)]);
    }
    const auto strict_rows = [&](const Matrix& M, double shift, double sign) {
        for (int i = 0; i < n; ++i) {
            LinForm f;
            for (int j = 0; j < n; ++j) {
                const double c = sign * (M(i, j) - (i == j ? shift : 0.0));
                if (c != 0.0) f.emplace_back(lam[static_cast<size_t>(j)], c);
            }
            fb.add_strict(f);
        }
    };
    for (const Matrix& M : rows.flows_neg) strict_rows(M, 0.0, +1.0);
    for (const Matrix& M : rows.flows_pos) strict_rows(M, 0.0, -1.0);
    for (const Matrix& M : rows.maps) strict_rows(M, 1.0, +1.0);
    auto res = fb.solve_max_margin();
    margin = res.margin;
    return res.feasible;
}

}  // namespace

VerifyReport verify_closed_loop(const SystemSpec& s, const DwellRegime& regime,
                                const Controller& k) {
    s.validate();
    regime.validate();
    const int n = s.n();
    if (k.n() != n) throw dimension_error("controller state dimension does not match the plant");
    if (s.mc() > 0 && k.mc() > 0 && k.mc() != s.mc())
        throw dimension_error("flow gain row count does not match the B_c column count");
    if (s.md() > 0 && k.md() > 0 && k.md() != s.md())
        throw dimension_error("jump gain row count does not match the B_d column count");

    VerifyReport rep;
    std::vector<std::string> notes;
    const double kPosTol = 1e-9;
    const int S = k.b > k.a ? 1001 : 1;

    // Gain denominators first; every later evaluation divides by them.
    rep.min_denominator = std::numeric_limits<double>::infinity();
    for (int q = 0; q < S; ++q) {
        const double tau = S > 1 ? k.a + (k.b - k.a) * q / (S - 1) : k.a;
        for (const auto& den : k.Kc_den)
            rep.min_denominator = std::min(rep.min_denominator, den(tau));
    }
    rep.denom_ok = !(rep.min_denominator <= 0.0);
    if (!rep.denom_ok) {
        rep.detail = "a gain denominator is not positive on the clock window";
        return rep;
    }

    // Closed flow stays Metzler across the clock window.
    rep.metzler_ok = true;
    double worst_off = 0.0;
    double worst_tau = 0.0;
    for (int q = 0; q < S; ++q) {
        const double tau = S > 1 ? k.a + (k.b - k.a) * q / (S - 1) : k.a;
        const Matrix M = closed_flow(s, k, tau);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                if (M(i, j) < worst_off) {
                    worst_off = M(i, j);
                    worst_tau = tau;
                }
            }
    }
    if (worst_off < -kPosTol) {
        rep.metzler_ok = false;
        notes.push_back("closed flow loses the Metzler property (worst off-diagonal " +
                        std::to_string(worst_off) + " at clock " + std::to_string(worst_tau) + ")");
    }

    // Closed jump map nonnegative, across the schedule window when present.
    rep.jump_nonneg_ok = true;
    {
        std::vector<double> js;
        if (k.Kd_num && k.Kd_interval) {
            const int Q = k.Kd_interval->second > k.Kd_interval->first ? 101 : 1;
            for (int q = 0; q < Q; ++q)
                js.push_back(Q > 1 ? k.Kd_interval->first +
                                         (k.Kd_interval->second - k.Kd_interval->first) * q / (Q - 1)
                                   : k.Kd_interval->first);
        } else {
            js.push_back(0.0);
        }
        double worst = 0.0;
        for (double th : js) {
            const Matrix M = closed_jump(s, k, th);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) worst = std::min(worst, M(i, j));
        }
        if (worst < -kPosTol) {
            rep.jump_nonneg_ok = false;
            notes.push_back("closed jump map has a negative entry (worst " + std::to_string(worst) +
                            ")");
        }
    }

    // Dwell lengths whose transition maps feed the stability rows.
    std::vector<double> thetas;
    switch (regime.kind) {
        case RegimeKind::Arbitrary:
            break;
        case RegimeKind::Constant:
        case RegimeKind::Minimum:
        case RegimeKind::Maximum:
            thetas.push_back(regime.T);
            break;
        case RegimeKind::Range: {
            if (!std::isfinite(regime.T_max))
                throw parameter_error(
                    "closed-loop audit over an unbounded dwell range is not supported");
            const int Q = regime.T_max > regime.T_min ? 101 : 1;
            for (int q = 0; q < Q; ++q)
                thetas.push_back(Q > 1 ? regime.T_min +
                                             (regime.T_max - regime.T_min) * q / (Q - 1)
                                       : regime.T_min);
            break;
        }
    }

    std::vector<Matrix> Psi;
    bool converged = true;
    if (!thetas.empty()) {
        const double span = thetas.back();
        const auto compute = [&](int N) {
            std::vector<Matrix> out;
            out.reserve(thetas.size());
            for (double th : thetas) {
                const int m = std::max(1, static_cast<int>(std::ceil(N * th / span)));
                out.push_back(closed_transition(s, k, th, m));
            }
            return out;
        };
        try {
            int steps = 2000;
            Psi = compute(steps);
            converged = false;
            for (int r = 0; r < 8 && !converged; ++r) {
                steps *= 2;
                auto fine = compute(steps);
                double delta = 0.0;
                for (size_t q = 0; q < Psi.size(); ++q) {
                    const double scale = std::max(1.0, fine[q].norm_inf());
                    delta = std::max(delta, (Psi[q] - fine[q]).norm_inf() / scale);
                }
                Psi = std::move(fine);
                rep.integration_error = delta;
                converged = delta < 1e-8;
            }
            if (!converged) notes.push_back("transition map integration did not converge");
        } catch (const error& e) {
            converged = false;
            notes.push_back(std::string("transition map integration failed: ") + e.what());
        }
    }

    if (converged) {
        StabilityRows rows;
        switch (regime.kind) {
            case RegimeKind::Arbitrary:
                rows.flows_neg.push_back(closed_flow(s, k, k.a));
                rows.maps.push_back(closed_jump(s, k, 0.0));
                break;
            case RegimeKind::Constant:
                rows.maps.push_back(closed_jump(s, k, regime.T) * Psi[0]);
                break;
            case RegimeKind::Minimum:
                rows.flows_neg.push_back(closed_flow(s, k, regime.T));
                rows.maps.push_back(Psi[0] * closed_jump(s, k, regime.T));
                break;
            case RegimeKind::Maximum:
                rows.flows_pos.push_back(closed_flow(s, k, regime.T));
                rows.maps.push_back(closed_jump(s, k, regime.T) * Psi[0]);
                break;
            case RegimeKind::Range:
                for (size_t q = 0; q < thetas.size(); ++q)
                    rows.maps.push_back(Psi[q] * closed_jump(s, k, thetas[q]));
                break;
        }
        rep.lp_ok = vector_stability(rows, n, rep.lp_margin);
        if (!rep.lp_ok) notes.push_back("no positive vector certifies the closed-loop decay");
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
