#include "posidwell/lift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace posidwell {

void Backend::validate() const {
    switch (kind) {
    case Kind::Exact:
        return;
    case Kind::Grid:
        if (param < 1) throw parameter_error("grid backend needs at least one sample point");
        return;
    case Kind::Pwl:
        if (param < 1) throw parameter_error("piecewise-linear backend needs at least one segment");
        return;
    case Kind::Handelman:
        if (param < 1) throw parameter_error("polynomial backend needs degree at least one");
        return;
    }
}

std::vector<double> ClockPolyVec::value(double tau) const {
    std::vector<double> v(entries.size());
    for (size_t j = 0; j < entries.size(); ++j) v[j] = entries[j](tau);
    return v;
}

std::vector<double> ClockPwlVec::value(double tau) const {
    const int segs = segments();
    const int n = size();
    std::vector<double> v(static_cast<size_t>(n));
    if (segs < 1) return v;
    const double h = (b - a) / segs;
    int k = static_cast<int>(std::floor((tau - a) / h));
    k = std::clamp(k, 0, segs - 1);
    const double s = std::clamp((tau - a) / h - k, 0.0, 1.0);
    for (int j = 0; j < n; ++j)
        v[static_cast<size_t>(j)] = (1.0 - s) * nodes[static_cast<size_t>(k)][static_cast<size_t>(j)] +
                                    s * nodes[static_cast<size_t>(k) + 1][static_cast<size_t>(j)];
    return v;
}

namespace {

double anchor_point(Statement st, Variant variant, double a, double b) {
    if (st == Statement::Zeta) return variant == Variant::NonSwapped ? b : a;
    return variant == Variant::NonSwapped ? a : b;
}

} // namespace

std::vector<double> certificate_lambda(const Certificate& cert) {
    if (cert.kind == CertificateKind::VectorLambda) return cert.lambda;
    if (!cert.statement)
        throw parameter_error("clock certificate is missing its statement tag");
    std::vector<double> lam;
    if (cert.kind == CertificateKind::ClockPolynomial) {
        for (const auto& blk : cert.poly) {
            auto v = blk.value(anchor_point(*cert.statement, cert.variant, blk.a, blk.b));
            lam.insert(lam.end(), v.begin(), v.end());
        }
    } else {
        for (const auto& blk : cert.pwl) {
            auto v = blk.value(anchor_point(*cert.statement, cert.variant, blk.a, blk.b));
            lam.insert(lam.end(), v.begin(), v.end());
        }
    }
    return lam;
}

LinForm& accumulate(LinForm& into, const LinForm& add, double w) {
    for (const auto& [var, coeff] : add) into.emplace_back(var, w * coeff);
    return into;
}

void LinPoly::ensure_degree(int d) {
    if (static_cast<int>(c.size()) < d + 1) c.resize(static_cast<size_t>(d) + 1);
}

void LinPoly::add(int power, int var, double coeff) {
    ensure_degree(power);
    c[static_cast<size_t>(power)].emplace_back(var, coeff);
}

void LinPoly::add_scaled(const LinPoly& other, double w) {
    ensure_degree(other.degree());
    for (size_t k = 0; k < other.c.size(); ++k) accumulate(c[k], other.c[k], w);
}

LinPoly LinPoly::compose_affine(double alpha, double beta) const {
    // Horner scheme: result = sum_k c[k] (alpha + beta v)^k.
    LinPoly result;
    if (c.empty()) return result;
    result.c.push_back(c.back());
    for (size_t k = c.size() - 1; k-- > 0;) {
        LinPoly next;
        next.ensure_degree(result.degree() + 1);
        for (size_t i = 0; i < result.c.size(); ++i) {
            accumulate(next.c[i], result.c[i], alpha);
            accumulate(next.c[i + 1], result.c[i], beta);
        }
        accumulate(next.c[0], c[k]);
        result = std::move(next);
    }
    return result;
}

FnBlock::FnBlock(FeasibilityBuilder& builder, const std::string& prefix, int count, Layout layout,
                 int d, double a, double b, bool bounded)
    : count_(count), layout_(layout), d_(d), a_(a), b_(b) {
    if (count < 1) throw parameter_error("function block needs at least one entry");
    if (d < 1) throw parameter_error("function block needs degree or segment count at least one");
    if (!(b > a)) throw parameter_error("function block needs a nonempty clock interval");
    const int per = d_ + 1;
    base_ = builder.cols();
    constexpr double kCoeffBox = 1e6;
    for (int j = 0; j < count_; ++j)
        for (int k = 0; k < per; ++k) {
            const std::string name = prefix + "_" + std::to_string(j) + "_" + std::to_string(k);
            if (bounded)
                builder.add_variable(name, -kCoeffBox, kCoeffBox);
            else
                builder.add_variable(name);
        }
}

int FnBlock::segments() const { return layout_ == Layout::Pwl ? d_ : 1; }

double FnBlock::seg_lo(int k) const {
    return layout_ == Layout::Pwl ? a_ + (b_ - a_) * k / d_ : a_;
}

double FnBlock::seg_hi(int k) const {
    return layout_ == Layout::Pwl ? a_ + (b_ - a_) * (k + 1) / d_ : b_;
}

LinPoly FnBlock::poly_on(int j, int k) const {
    LinPoly p;
    const int base_j = base_ + j * (d_ + 1);
    if (layout_ == Layout::Poly) {
        for (int q = 0; q <= d_; ++q) p.add(q, base_j + q, 1.0);
    } else {
        p.add(0, base_j + k, 1.0);
        p.add(1, base_j + k, -1.0);
        p.add(1, base_j + k + 1, 1.0);
    }
    return p;
}

LinPoly FnBlock::dtau_on(int j, int k) const {
    LinPoly p;
    const int base_j = base_ + j * (d_ + 1);
    if (layout_ == Layout::Poly) {
        const double inv = 1.0 / (b_ - a_);
        p.ensure_degree(std::max(d_ - 1, 0));
        for (int q = 1; q <= d_; ++q) p.add(q - 1, base_j + q, q * inv);
    } else {
        const double inv = 1.0 / (seg_hi(k) - seg_lo(k));
        p.add(0, base_j + k, -inv);
        p.add(0, base_j + k + 1, inv);
    }
    return p;
}

LinForm FnBlock::at(int j, double tau) const {
    LinForm f;
    const int base_j = base_ + j * (d_ + 1);
    if (layout_ == Layout::Poly) {
        const double u = (tau - a_) / (b_ - a_);
        double p = 1.0;
        for (int q = 0; q <= d_; ++q) {
            f.emplace_back(base_j + q, p);
            p *= u;
        }
    } else {
        const double h = (b_ - a_) / d_;
        int k = static_cast<int>(std::floor((tau - a_) / h));
        k = std::clamp(k, 0, d_ - 1);
        const double s = std::clamp((tau - a_) / h - k, 0.0, 1.0);
        f.emplace_back(base_j + k, 1.0 - s);
        f.emplace_back(base_j + k + 1, s);
    }
    return f;
}

ClockPolyVec FnBlock::extract_poly(const std::vector<double>& witness) const {
    if (layout_ != Layout::Poly)
        throw parameter_error("polynomial extraction from a piecewise-linear block");
    ClockPolyVec out;
    out.a = a_;
    out.b = b_;
    const double len = b_ - a_;
    for (int j = 0; j < count_; ++j) {
        std::vector<double> cu(static_cast<size_t>(d_) + 1);
        for (int q = 0; q <= d_; ++q)
            cu[static_cast<size_t>(q)] = witness[static_cast<size_t>(base_ + j * (d_ + 1) + q)];
        out.entries.push_back(Poly(std::move(cu)).compose_affine(-a_ / len, 1.0 / len));
    }
    return out;
}

ClockPwlVec FnBlock::extract_pwl(const std::vector<double>& witness) const {
    if (layout_ != Layout::Pwl)
        throw parameter_error("node extraction from a polynomial block");
    ClockPwlVec out;
    out.a = a_;
    out.b = b_;
    out.nodes.assign(static_cast<size_t>(d_) + 1,
                     std::vector<double>(static_cast<size_t>(count_), 0.0));
    for (int k = 0; k <= d_; ++k)
        for (int j = 0; j < count_; ++j)
            out.nodes[static_cast<size_t>(k)][static_cast<size_t>(j)] =
                witness[static_cast<size_t>(base_ + j * (d_ + 1) + k)];
    return out;
}

void emit_strict_point(FeasibilityBuilder& builder, const LinForm& form) {
    double s = 0.0;
    for (const auto& [var, coeff] : form) {
        (void)var;
        s = std::max(s, std::abs(coeff));
    }
    if (s == 0.0) s = 1.0;
    LinForm row = form;
    row.emplace_back(builder.margin_var(), s);
    builder.add_leq(row, 0.0);
}

void emit_positive_point(FeasibilityBuilder& builder, const LinForm& form) {
    LinForm row;
    row.emplace_back(builder.margin_var(), 1.0);
    accumulate(row, form, -1.0);
    builder.add_leq(row, 0.0);
}

void emit_gap_point(FeasibilityBuilder& builder, const LinForm& form) {
    LinForm row = form;
    row.emplace_back(builder.margin_var(), 1.0);
    builder.add_leq(row, 0.0);
}

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

LinForm flatten_at(const LinPoly& p, double v) {
    LinForm f;
    double pw = 1.0;
    for (const auto& coeff : p.c) {
        accumulate(f, coeff, pw);
        pw *= v;
    }
    return f;
}

} // namespace

void handelman_dominate(FeasibilityBuilder& builder, const LinPoly& p, int dh,
                        const std::string& prefix) {
    if (p.degree() > dh)
        throw parameter_error("polynomial certificate degree exceeds the multiplier degree");
    // Multipliers theta_ij >= 0 for the basis s^i (1-s)^j, i + j <= dh.
    std::vector<std::vector<int>> theta(static_cast<size_t>(dh) + 1);
    for (int i = 0; i <= dh; ++i)
        for (int j = 0; i + j <= dh; ++j)
            theta[static_cast<size_t>(i)].push_back(builder.add_variable(
                prefix + "_h" + std::to_string(i) + "_" + std::to_string(j), 0.0,
                std::numeric_limits<double>::infinity()));
    // Coefficient dominance: for each power k, the k-th coefficient of
    // p(s) + sum theta_ij s^i (1-s)^j must be <= 0; nonnegativity of the
    // basis on [0, 1] then gives p <= 0 there.
    for (int k = 0; k <= dh; ++k) {
        LinForm row;
        if (k <= p.degree()) row = p.c[static_cast<size_t>(k)];
        for (int i = 0; i <= std::min(k, dh); ++i)
            for (int j = 0; i + j <= dh; ++j) {
                const int m = k - i;
                if (m < 0 || m > j) continue;
                const double beta = (m % 2 == 0 ? 1.0 : -1.0) * binom(j, m);
                row.emplace_back(theta[static_cast<size_t>(i)][static_cast<size_t>(j)], beta);
            }
        builder.add_leq(row, 0.0);
    }
}

void emit_interval_row(FeasibilityBuilder& builder, const IntervalRow& row,
                       const Backend& backend) {
    if (row.terms.empty()) throw parameter_error("interval row has no function terms");
    if (!(row.hi > row.lo)) throw parameter_error("interval row has an empty clock window");

    double scale = 0.0;
    for (const auto& term : row.terms) scale = std::max(scale, std::abs(term.weight));
    for (const auto& [var, coeff] : row.fixed) {
        (void)var;
        scale = std::max(scale, std::abs(coeff));
    }
    if (scale == 0.0) scale = 1.0;
    const double tcoeff = row.strict_scaled ? scale : row.t_coeff;

    const FnBlock* first = row.terms.front().block;
    const bool pwl = first->layout() == FnBlock::Layout::Pwl;
    if (pwl) {
        for (const auto& term : row.terms)
            if (term.block->layout() != FnBlock::Layout::Pwl ||
                term.block->segments() != first->segments() || term.block->a() != first->a() ||
                term.block->b() != first->b())
                throw parameter_error(
                    "piecewise-linear interval rows need one shared segmentation");
        for (int k = 0; k < first->segments(); ++k) {
            const double slo = first->seg_lo(k), shi = first->seg_hi(k);
            const double wlo = std::max(row.lo, slo), whi = std::min(row.hi, shi);
            if (!(whi > wlo)) continue;
            LinPoly p;
            for (const auto& term : row.terms)
                p.add_scaled(term.derivative ? term.block->dtau_on(term.index, k)
                                             : term.block->poly_on(term.index, k),
                             term.weight);
            if (p.degree() > 1)
                throw parameter_error(
                    "interval row is not affine; use the polynomial certificate backend");
            if (wlo > slo || whi < shi) {
                const double h = shi - slo;
                p = p.compose_affine((wlo - slo) / h, (whi - wlo) / h);
            }
            p.ensure_degree(0);
            accumulate(p.c[0], row.fixed);
            if (tcoeff != 0.0) p.add(0, builder.margin_var(), tcoeff);
            builder.add_leq(flatten_at(p, 0.0), 0.0);
            builder.add_leq(flatten_at(p, 1.0), 0.0);
        }
        return;
    }

    if (backend.kind != Backend::Kind::Handelman)
        throw parameter_error("polynomial interval rows need the polynomial backend");
    LinPoly p;
    for (const auto& term : row.terms) {
        const FnBlock* blk = term.block;
        if (blk->layout() != FnBlock::Layout::Poly)
            throw parameter_error("interval row mixes polynomial and piecewise-linear blocks");
        const double len = blk->b() - blk->a();
        const double alpha = (row.lo - blk->a()) / len;
        const double beta = (row.hi - row.lo) / len;
        LinPoly q = term.derivative ? blk->dtau_on(term.index, 0) : blk->poly_on(term.index, 0);
        if (alpha != 0.0 || beta != 1.0) q = q.compose_affine(alpha, beta);
        p.add_scaled(q, term.weight);
    }
    p.ensure_degree(0);
    accumulate(p.c[0], row.fixed);
    if (tcoeff != 0.0) p.add(0, builder.margin_var(), tcoeff);
    handelman_dominate(builder, p, backend.param, "m" + std::to_string(builder.rows()));
}

Variant default_variant(RegimeKind kind) {
    switch (kind) {
    case RegimeKind::Arbitrary:
        return Variant::Primal;
    case RegimeKind::Range:
        return Variant::Swapped;
    default:
        return Variant::NonSwapped;
    }
}

namespace {

void require_positive_system(const SystemSpec& s) {
    if (!is_metzler(s.A)) throw domain_error("flow matrix must be Metzler for a positive system");
    if (!is_nonnegative(s.J))
        throw domain_error("jump matrix must be nonnegative for a positive system");
}

// Strict rows "lambda' (M - I) < 0" columnwise over existing lambda vars.
void emit_map_contraction(FeasibilityBuilder& fb, const std::vector<int>& lam, const Matrix& m) {
    const int n = m.rows();
    for (int j = 0; j < n; ++j) {
        LinForm f;
        for (int i = 0; i < n; ++i)
            if (m(i, j) != 0.0) f.emplace_back(lam[static_cast<size_t>(i)], m(i, j));
        f.emplace_back(lam[static_cast<size_t>(j)], -1.0);
        emit_strict_point(fb, f);
    }
}

// Strict rows "sign * lambda' A < 0" columnwise.
void emit_flow_sign(FeasibilityBuilder& fb, const std::vector<int>& lam, const Matrix& a,
                    double sign) {
    const int n = a.rows();
    for (int j = 0; j < n; ++j) {
        LinForm f;
        for (int i = 0; i < n; ++i)
            if (a(i, j) != 0.0) f.emplace_back(lam[static_cast<size_t>(i)], sign * a(i, j));
        emit_strict_point(fb, f);
    }
}

CheckResult finish_vector(FeasibilityBuilder& fb, const std::vector<int>& lam,
                          const DwellRegime& regime, Variant variant) {
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
        cert.regime = regime;
        cert.variant = variant;
        res.certificate = cert;
    }
    return res;
}

} // namespace

CheckResult lifted_check(const SystemSpec& s, const DwellRegime& regime, const Backend& backend,
                         Statement statement, std::optional<Variant> variant_opt) {
    s.validate();
    regime.validate();
    backend.validate();
    require_positive_system(s);
    const Variant variant = variant_opt.value_or(default_variant(regime.kind));
    const int n = s.n();

    if (regime.kind == RegimeKind::Arbitrary)
        throw parameter_error(
            "the arbitrary regime has no dwell clock; use the arbitrary-regime check");
    if (variant != Variant::NonSwapped && variant != Variant::Swapped)
        throw parameter_error("timed regimes take the NonSwapped or Swapped variant");

    if (regime.kind == RegimeKind::Maximum) {
        Matrix neg = -1.0 * s.A;
        if (!routh_hurwitz(characteristic_polynomial(neg)))
            throw regime_error(
                "maximum-dwell analysis needs every flow eigenvalue in the open right half "
                "plane; analyze a dwell range with a small lower bound instead");
    }
    if (regime.kind == RegimeKind::Range && !std::isfinite(regime.T_max) &&
        backend.kind != Backend::Kind::Exact)
        throw parameter_error(
            "infinite upper dwell bound; analyze the minimum regime at the lower bound instead");

    // Exact and grid backends: plain vector conditions.
    if (backend.kind == Backend::Kind::Exact || backend.kind == Backend::Kind::Grid) {
        FeasibilityBuilder fb;
        std::vector<int> lam;
        for (int j = 0; j < n; ++j) lam.push_back(fb.add_variable("l" + std::to_string(j)));
        for (int v : lam) fb.require_positive(v);

        auto map_at = [&](double T) {
            const Matrix phi = expm(s.A, T);
            return variant == Variant::NonSwapped ? s.J * phi : phi * s.J;
        };
        switch (regime.kind) {
        case RegimeKind::Constant:
            if (backend.kind == Backend::Kind::Grid)
                throw parameter_error("grid backend applies to dwell ranges");
            emit_map_contraction(fb, lam, map_at(regime.T));
            break;
        case RegimeKind::Minimum:
            if (backend.kind == Backend::Kind::Grid)
                throw parameter_error("grid backend applies to dwell ranges");
            emit_flow_sign(fb, lam, s.A, 1.0);
            emit_map_contraction(fb, lam, map_at(regime.T));
            break;
        case RegimeKind::Maximum:
            if (backend.kind == Backend::Kind::Grid)
                throw parameter_error("grid backend applies to dwell ranges");
            emit_flow_sign(fb, lam, s.A, -1.0);
            emit_map_contraction(fb, lam, map_at(regime.T));
            break;
        case RegimeKind::Range: {
            if (backend.kind == Backend::Kind::Exact)
                throw parameter_error(
                    "dwell ranges need the grid or a clock certificate backend");
            const int np = backend.param;
            for (int k = 0; k < np; ++k) {
                const double theta =
                    np == 1 ? regime.T_min
                            : regime.T_min + (regime.T_max - regime.T_min) * k / (np - 1);
                emit_map_contraction(fb, lam, map_at(theta));
            }
            break;
        }
        default:
            break;
        }
        return finish_vector(fb, lam, regime, variant);
    }

    // Clock certificate backends.
    if (regime.kind == RegimeKind::Range) {
        const bool ok = (statement == Statement::Zeta && variant == Variant::Swapped) ||
                        (statement == Statement::Xi && variant == Variant::NonSwapped);
        if (!ok)
            throw parameter_error(
                "dwell ranges support the Zeta statement with the Swapped variant or the Xi "
                "statement with the NonSwapped variant");
        if (!(regime.T_max > regime.T_min))
            throw parameter_error(
                "degenerate dwell range; analyze the constant regime at that dwell");
    }

    const double L = regime.kind == RegimeKind::Range ? regime.T_max : regime.T;
    const bool xi = statement == Statement::Xi;
    const double anchor = anchor_point(statement, variant, 0.0, L);

    FeasibilityBuilder fb;
    const FnBlock::Layout layout =
        backend.kind == Backend::Kind::Pwl ? FnBlock::Layout::Pwl : FnBlock::Layout::Poly;
    FnBlock zeta(fb, "z", n, layout, backend.param, 0.0, L, true);

    for (int j = 0; j < n; ++j) emit_positive_point(fb, zeta.at(j, anchor));

    if (regime.kind == RegimeKind::Minimum || regime.kind == RegimeKind::Maximum) {
        const double sign = regime.kind == RegimeKind::Minimum ? 1.0 : -1.0;
        for (int j = 0; j < n; ++j) {
            LinForm f;
            for (int i = 0; i < n; ++i)
                if (s.A(i, j) != 0.0) accumulate(f, zeta.at(i, anchor), sign * s.A(i, j));
            emit_strict_point(fb, f);
        }
    }

    // Flow rows on the whole clock interval.
    for (int j = 0; j < n; ++j) {
        IntervalRow row;
        for (int i = 0; i < n; ++i)
            if (s.A(i, j) != 0.0) row.terms.push_back({&zeta, i, s.A(i, j), false});
        row.terms.push_back({&zeta, j, xi ? 1.0 : -1.0, true});
        row.lo = 0.0;
        row.hi = L;
        emit_interval_row(fb, row, backend);
    }

    // Jump rows.
    if (regime.kind == RegimeKind::Range) {
        for (int j = 0; j < n; ++j) {
            IntervalRow row;
            row.lo = regime.T_min;
            row.hi = regime.T_max;
            row.t_coeff = 1.0;
            if (!xi) {
                // zeta(theta)' J - zeta(0)' + t <= 0 columnwise.
                for (int i = 0; i < n; ++i)
                    if (s.J(i, j) != 0.0) row.terms.push_back({&zeta, i, s.J(i, j), false});
                accumulate(row.fixed, zeta.at(j, 0.0), -1.0);
                if (row.terms.empty()) {
                    // Column of J is zero: the row is clock-independent.
                    emit_gap_point(fb, row.fixed);
                    continue;
                }
            } else {
                // xi(0)' J - xi(theta)' + t <= 0 columnwise.
                for (int i = 0; i < n; ++i)
                    if (s.J(i, j) != 0.0) accumulate(row.fixed, zeta.at(i, 0.0), s.J(i, j));
                row.terms.push_back({&zeta, j, -1.0, false});
            }
            emit_interval_row(fb, row, backend);
        }
    } else {
        for (int j = 0; j < n; ++j) {
            LinForm f;
            const double jump_end = xi ? 0.0 : L;
            const double minus_end = xi ? L : 0.0;
            for (int i = 0; i < n; ++i)
                if (s.J(i, j) != 0.0) accumulate(f, zeta.at(i, jump_end), s.J(i, j));
            accumulate(f, zeta.at(j, minus_end), -1.0);
            emit_gap_point(fb, f);
        }
    }

    FeasibilityResult fr = fb.solve_max_margin();
    CheckResult res;
    res.margin = fr.margin;
    res.lp_rows = fr.rows;
    res.lp_cols = fr.cols;
    res.lp_seconds = fr.seconds;
    if (fr.feasible) {
        Certificate cert;
        cert.margin = fr.margin;
        cert.regime = regime;
        cert.variant = variant;
        cert.statement = statement;
        if (layout == FnBlock::Layout::Poly) {
            cert.kind = CertificateKind::ClockPolynomial;
            cert.poly.push_back(zeta.extract_poly(fr.witness));
        } else {
            cert.kind = CertificateKind::ClockPiecewiseLinear;
            cert.pwl.push_back(zeta.extract_pwl(fr.witness));
        }
        res.certificate = cert;
    }
    return res;
}

} // namespace posidwell
