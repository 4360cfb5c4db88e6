#include "posidwell/lp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>

namespace posidwell {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kPhase1Tol = 1e-9;
constexpr double kWitnessTol = 1e-9;
constexpr int kStallLimit = 50;

std::ostream* g_dump_sink = nullptr;

} // namespace

void set_dump_sink(std::ostream* sink) { g_dump_sink = sink; }

int LpProblem::add_variable(std::string name, double lo, double hi) {
    if (std::isnan(lo) || std::isnan(hi)) throw validation_error("variable bound is NaN");
    if (lo > hi) throw validation_error("variable '" + name + "' has lo > hi");
    for (auto& c : constraints) c.coeffs.push_back(0.0);
    if (!objective.empty()) objective.push_back(0.0);
    variables.push_back({std::move(name), lo, hi});
    return static_cast<int>(variables.size()) - 1;
}

void LpProblem::add_constraint(std::vector<double> coeffs, Relation rel, double rhs) {
    if (coeffs.size() != variables.size())
        throw dimension_error("constraint row length does not match variable count");
    for (double v : coeffs)
        if (std::isnan(v)) throw validation_error("constraint coefficient is NaN");
    if (std::isnan(rhs)) throw validation_error("constraint rhs is NaN");
    constraints.push_back({std::move(coeffs), rel, rhs});
}

void LpProblem::add_row(const std::vector<std::pair<int, double>>& terms, Relation rel,
                        double rhs) {
    std::vector<double> coeffs(variables.size(), 0.0);
    for (auto [idx, val] : terms) {
        if (idx < 0 || idx >= static_cast<int>(variables.size()))
            throw dimension_error("row term references an unknown variable index");
        coeffs[static_cast<size_t>(idx)] += val;
    }
    add_constraint(std::move(coeffs), rel, rhs);
}

void LpProblem::validate() const {
    for (const auto& v : variables) {
        if (std::isnan(v.lo) || std::isnan(v.hi)) throw validation_error("variable bound is NaN");
        if (v.lo > v.hi) throw validation_error("variable '" + v.name + "' has lo > hi");
    }
    for (const auto& c : constraints) {
        if (c.coeffs.size() != variables.size())
            throw dimension_error("constraint row length does not match variable count");
        for (double v : c.coeffs)
            if (std::isnan(v)) throw validation_error("constraint coefficient is NaN");
        if (std::isnan(c.rhs)) throw validation_error("constraint rhs is NaN");
    }
    if (!objective.empty() && objective.size() != variables.size())
        throw dimension_error("objective length does not match variable count");
    for (double v : objective)
        if (std::isnan(v)) throw validation_error("objective coefficient is NaN");
}

namespace {

void dump_problem(std::ostream& os, const LpProblem& p) {
    os << "lp: maximize";
    for (size_t j = 0; j < p.variables.size(); ++j) {
        double c = j < p.objective.size() ? p.objective[j] : 0.0;
        if (c != 0.0) os << " " << c << "*" << p.variables[j].name;
    }
    os << "\n";
    for (size_t i = 0; i < p.constraints.size(); ++i) {
        const auto& row = p.constraints[i];
        os << "  r" << i << ":";
        for (size_t j = 0; j < row.coeffs.size(); ++j)
            if (row.coeffs[j] != 0.0) os << " " << row.coeffs[j] << "*" << p.variables[j].name;
        os << (row.rel == Relation::Eq ? " == " : " <= ") << row.rhs << "\n";
    }
    for (const auto& v : p.variables)
        os << "  " << v.name << " in [" << v.lo << ", " << v.hi << "]\n";
    os.flush();
}

// How one original variable maps onto canonical (>= 0) columns.
struct ColMap {
    enum Kind { Shifted, Flipped, Split, Fixed } kind;
    int col = -1;       // primary column, -1 for Fixed
    int col_neg = -1;   // negative part for Split
    double offset = 0.0;  // lo for Shifted, hi for Flipped, value for Fixed
    bool has_upper = false;
    double upper = 0.0;   // hi - lo for Shifted with finite hi
};

struct Tableau {
    std::vector<std::vector<double>> rows;  // each of length ncols + 1, rhs last
    std::vector<int> basis;                 // column basic in each row
    int ncols = 0;
};

class Simplex {
public:
    explicit Simplex(const LpProblem& p) : p_(p) { build(); }

    LpSolution run();

private:
    void build();
    // Returns false when the phase hit an unbounded ray.
    bool iterate(std::vector<double>& obj, bool phase2);
    void pivot(int row, int col, std::vector<double>& obj);
    void collapse_splits();

    std::vector<double> extract_values() const;

    const LpProblem& p_;
    Tableau t_;
    std::vector<ColMap> cmap_;
    int nstruct_ = 0;        // canonical structural columns
    int nuser_rows_ = 0;
    bool goal_reached_ = false;
    std::vector<int> slack_col_;   // per tableau row, -1 if none
    std::vector<int> art_col_;     // per tableau row, -1 if none
    std::vector<bool> flipped_;    // per tableau row
    std::vector<double> scale_;    // per tableau row
    std::vector<int> row_origin_;  // user constraint index, -1 for bound rows
    std::vector<bool> banned_;     // per column: artificial, locked out of entering
    std::vector<double> cost2_;    // phase-2 costs per column
    std::vector<int> nz_;          // pivot-row nonzeros, reused per pivot
    std::vector<int> partner_;     // split-pair partner per column, -1 if none
    std::vector<int> row_of_;      // scratch: basis row per column
    bool have_splits_ = false;
    int iterations_ = 0;
};

void Simplex::build() {
    const size_t nv = p_.variables.size();
    cmap_.resize(nv);
    int col = 0;
    for (size_t j = 0; j < nv; ++j) {
        const auto& v = p_.variables[j];
        ColMap& m = cmap_[j];
        if (v.lo == v.hi && v.lo > -kInf) {
            // Pinned variables are substituted away instead of kept as a
            // column squeezed between a lower bound and an upper-bound row,
            // which the degenerate endgame grinds on.
            m.kind = ColMap::Fixed;
            m.offset = v.lo;
        } else if (v.lo > -kInf) {
            m.kind = ColMap::Shifted;
            m.offset = v.lo;
            m.col = col++;
            if (v.hi < kInf) {
                m.has_upper = true;
                m.upper = v.hi - v.lo;
            }
        } else if (v.hi < kInf) {
            m.kind = ColMap::Flipped;
            m.offset = v.hi;
            m.col = col++;
        } else {
            m.kind = ColMap::Split;
            m.col = col++;
            m.col_neg = col++;
        }
    }
    nstruct_ = col;

    // Transformed user rows plus upper-bound rows.
    struct RawRow {
        std::vector<double> a;
        Relation rel;
        double rhs;
        int origin;
    };
    std::vector<RawRow> raw;
    raw.reserve(p_.constraints.size());
    for (size_t i = 0; i < p_.constraints.size(); ++i) {
        const auto& c = p_.constraints[i];
        RawRow r{std::vector<double>(static_cast<size_t>(nstruct_), 0.0), c.rel, c.rhs,
                 static_cast<int>(i)};
        for (size_t j = 0; j < nv; ++j) {
            double a = c.coeffs[j];
            if (a == 0.0) continue;
            const ColMap& m = cmap_[j];
            switch (m.kind) {
            case ColMap::Shifted:
                r.a[static_cast<size_t>(m.col)] += a;
                r.rhs -= a * m.offset;
                break;
            case ColMap::Flipped:
                r.a[static_cast<size_t>(m.col)] -= a;
                r.rhs -= a * m.offset;
                break;
            case ColMap::Split:
                r.a[static_cast<size_t>(m.col)] += a;
                r.a[static_cast<size_t>(m.col_neg)] -= a;
                break;
            case ColMap::Fixed:
                r.rhs -= a * m.offset;
                break;
            }
        }
        raw.push_back(std::move(r));
    }
    nuser_rows_ = static_cast<int>(raw.size());
    for (size_t j = 0; j < nv; ++j) {
        const ColMap& m = cmap_[j];
        if (m.kind == ColMap::Shifted && m.has_upper) {
            RawRow r{std::vector<double>(static_cast<size_t>(nstruct_), 0.0), Relation::LessEq,
                     m.upper, -1};
            r.a[static_cast<size_t>(m.col)] = 1.0;
            raw.push_back(std::move(r));
        }
    }

    const int m = static_cast<int>(raw.size());
    slack_col_.assign(static_cast<size_t>(m), -1);
    art_col_.assign(static_cast<size_t>(m), -1);
    flipped_.assign(static_cast<size_t>(m), false);
    scale_.assign(static_cast<size_t>(m), 1.0);
    row_origin_.resize(static_cast<size_t>(m));

    // Column layout: structural, then one slack per LessEq row, then
    // artificials as needed. Rows are scaled to unit max coefficient and
    // negated where needed so every rhs is nonnegative.
    int nslack = 0;
    for (const auto& r : raw)
        if (r.rel == Relation::LessEq) ++nslack;
    int next_slack = nstruct_;

    t_.rows.reserve(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        RawRow& r = raw[static_cast<size_t>(i)];
        row_origin_[static_cast<size_t>(i)] = r.origin;
        double s = 0.0;
        for (double v : r.a) s = std::max(s, std::abs(v));
        if (s == 0.0) s = 1.0;
        scale_[static_cast<size_t>(i)] = s;
        for (double& v : r.a) v /= s;
        r.rhs /= s;

        if (r.rhs < 0.0) {
            flipped_[static_cast<size_t>(i)] = true;
            for (double& v : r.a) v = -v;
            r.rhs = -r.rhs;
        }
        if (r.rel == Relation::LessEq) slack_col_[static_cast<size_t>(i)] = next_slack++;
        t_.rows.push_back(std::move(r.a));
        t_.rows.back().push_back(r.rhs);  // packed; full column span laid out below
    }

    // Re-lay rows with full column span now that counts are known.
    const int ncols_noart = nstruct_ + nslack;
    std::vector<int> needs_art;
    for (int i = 0; i < m; ++i) {
        const bool leq = slack_col_[static_cast<size_t>(i)] >= 0;
        if (!leq || flipped_[static_cast<size_t>(i)]) needs_art.push_back(i);
    }
    t_.ncols = ncols_noart + static_cast<int>(needs_art.size());
    banned_.assign(static_cast<size_t>(t_.ncols), false);
    t_.basis.assign(static_cast<size_t>(m), -1);
    int next_art = ncols_noart;

    // Rows are laid out exactly as given: any rhs perturbation would let the
    // solved vertex drift off the true rows, and the post-hoc witness margin
    // measures against those. Degeneracy is handled by the largest-pivot
    // ratio tie-break, the sticky Bland fallback, and the split collapse.
    for (int i = 0; i < m; ++i) {
        std::vector<double>& packed = t_.rows[static_cast<size_t>(i)];
        double rhs = packed.back();
        packed.pop_back();
        packed.resize(static_cast<size_t>(t_.ncols) + 1, 0.0);
        packed[static_cast<size_t>(t_.ncols)] = rhs;
        int sc = slack_col_[static_cast<size_t>(i)];
        if (sc >= 0) packed[static_cast<size_t>(sc)] = flipped_[static_cast<size_t>(i)] ? -1.0 : 1.0;
    }
    for (int i : needs_art) {
        int ac = next_art++;
        art_col_[static_cast<size_t>(i)] = ac;
        t_.rows[static_cast<size_t>(i)][static_cast<size_t>(ac)] = 1.0;
        banned_[static_cast<size_t>(ac)] = true;
        t_.basis[static_cast<size_t>(i)] = ac;
    }
    for (int i = 0; i < m; ++i)
        if (t_.basis[static_cast<size_t>(i)] < 0)
            t_.basis[static_cast<size_t>(i)] = slack_col_[static_cast<size_t>(i)];

    partner_.assign(static_cast<size_t>(t_.ncols), -1);
    for (size_t j = 0; j < nv; ++j) {
        const ColMap& mp = cmap_[j];
        if (mp.kind != ColMap::Split) continue;
        partner_[static_cast<size_t>(mp.col)] = mp.col_neg;
        partner_[static_cast<size_t>(mp.col_neg)] = mp.col;
        have_splits_ = true;
    }

    // Phase-2 costs on canonical columns.
    cost2_.assign(static_cast<size_t>(t_.ncols), 0.0);
    for (size_t j = 0; j < nv; ++j) {
        double c = j < p_.objective.size() ? p_.objective[j] : 0.0;
        if (c == 0.0) continue;
        const ColMap& mp = cmap_[j];
        switch (mp.kind) {
        case ColMap::Shifted:
            cost2_[static_cast<size_t>(mp.col)] += c;
            break;
        case ColMap::Flipped:
            cost2_[static_cast<size_t>(mp.col)] -= c;
            break;
        case ColMap::Split:
            cost2_[static_cast<size_t>(mp.col)] += c;
            cost2_[static_cast<size_t>(mp.col_neg)] -= c;
            break;
        case ColMap::Fixed:
            break;  // constant term; the objective is recomputed from values
        }
    }
}

void Simplex::pivot(int row, int col, std::vector<double>& obj) {
    auto& r = t_.rows[static_cast<size_t>(row)];
    const double pv = r[static_cast<size_t>(col)];
    const double inv = 1.0 / pv;
    // Track the nonzero columns of the pivot row; zero columns leave every
    // other row untouched, and these tableaus start out very sparse.
    nz_.clear();
    for (size_t k = 0; k < r.size(); ++k) {
        if (r[k] == 0.0) continue;
        r[k] *= inv;
        nz_.push_back(static_cast<int>(k));
    }
    r[static_cast<size_t>(col)] = 1.0;
    for (size_t i = 0; i < t_.rows.size(); ++i) {
        if (static_cast<int>(i) == row) continue;
        auto& q = t_.rows[i];
        const double f = q[static_cast<size_t>(col)];
        if (f == 0.0) continue;
        for (const int k : nz_)
            q[static_cast<size_t>(k)] -= f * r[static_cast<size_t>(k)];
        q[static_cast<size_t>(col)] = 0.0;
    }
    const double f = obj[static_cast<size_t>(col)];
    if (f != 0.0) {
        for (const int k : nz_)
            obj[static_cast<size_t>(k)] -= f * r[static_cast<size_t>(k)];
        obj[static_cast<size_t>(col)] = 0.0;
    }
    t_.basis[static_cast<size_t>(row)] = col;
    ++iterations_;
}

void Simplex::collapse_splits() {
    // Adding the same amount to both halves of a split pair moves along a
    // null direction of every row, so the basis stays valid when the common
    // part of two basic halves is removed. Without this, degenerate pivots
    // ratchet both halves of free variables to astronomical values and the
    // tableau arithmetic drowns in cancellation.
    if (!have_splits_) return;
    const int rhs = t_.ncols;
    row_of_.assign(static_cast<size_t>(t_.ncols), -1);
    for (size_t i = 0; i < t_.rows.size(); ++i)
        row_of_[static_cast<size_t>(t_.basis[i])] = static_cast<int>(i);
    for (int p = 0; p < t_.ncols; ++p) {
        const int q = partner_[static_cast<size_t>(p)];
        if (q <= p) continue;
        const int ip = row_of_[static_cast<size_t>(p)];
        const int iq = row_of_[static_cast<size_t>(q)];
        if (ip < 0 || iq < 0) continue;
        double& vp = t_.rows[static_cast<size_t>(ip)][static_cast<size_t>(rhs)];
        double& vq = t_.rows[static_cast<size_t>(iq)][static_cast<size_t>(rhs)];
        const double mu = std::min(vp, vq);
        if (mu <= 0.0) continue;
        vp -= mu;
        vq -= mu;
    }
}

bool Simplex::iterate(std::vector<double>& obj, bool phase2) {
    const int rhs = t_.ncols;
    const int cap = 50000 + 200 * (static_cast<int>(t_.rows.size()) + t_.ncols);
    int stall = 0;
    bool bland = false;
    const bool can_stop_early = phase2 && std::isfinite(p_.stop_objective);
    static const bool trace = std::getenv("POSIDWELL_LP_TRACE") != nullptr;

    while (true) {
        if (iterations_ > cap) {
            // Phase 1 out of budget: leave the residual artificials in place
            // and let the caller's acceptance test report infeasible, which
            // is the safe verdict for a certificate search. Phase 2 has no
            // such fallback.
            if (!phase2) return true;
            throw solver_error("simplex iteration cap exceeded");
        }
        if (trace && iterations_ % 10000 == 0 && iterations_ > 0) {
            double cur = 0.0;
            for (size_t i = 0; i < t_.rows.size(); ++i)
                cur += cost2_[static_cast<size_t>(t_.basis[i])] *
                       t_.rows[i][static_cast<size_t>(rhs)];
            std::fprintf(stderr, "lp-trace iter=%d phase2=%d bland=%d stall=%d obj=%.12g\n",
                         iterations_, int(phase2), int(bland), stall, cur);
        }
        if (can_stop_early) {
            // Stop once a verified feasible basis meets the caller's goal;
            // the true objective and violation are recomputed from the
            // original rows, so tableau drift cannot fake this.
            const std::vector<double> x = extract_values();
            double o = 0.0;
            for (size_t j = 0; j < p_.objective.size(); ++j) o += p_.objective[j] * x[j];
            if (o >= p_.stop_objective && max_violation(p_, x) <= 1e-9) {
                goal_reached_ = true;
                return true;
            }
        }
        if (!phase2) {
            // Phase 1 only needs the artificials near zero, not a proved
            // optimum; degenerate endgames are skipped the same way.
            double art_sum = 0.0;
            for (size_t i = 0; i < t_.rows.size(); ++i)
                if (banned_[static_cast<size_t>(t_.basis[i])])
                    art_sum += t_.rows[i][static_cast<size_t>(rhs)];
            if (art_sum <= kPhase1Tol) return true;
        }
        // Entering column: Dantzig pricing, Bland's rule after a stall.
        int enter = -1;
        double best = kCostTol;
        for (int j = 0; j < t_.ncols; ++j) {
            if (banned_[static_cast<size_t>(j)] && phase2) continue;
            const double d = obj[static_cast<size_t>(j)];
            if (d <= kCostTol) continue;
            if (bland) {
                enter = j;
                break;
            }
            if (d > best) {
                best = d;
                enter = j;
            }
        }
        if (enter < 0) return true;  // optimal for this phase

        // Ratio test, two passes: find the tightest ratio, then leave on the
        // numerically largest pivot among the near-ties so multipliers stay
        // bounded; in Bland mode the smallest basis index wins instead, which
        // is what proves termination.
        int leave = -1;
        double best_ratio = kInf;
        const int m = static_cast<int>(t_.rows.size());
        for (int i = 0; i < m; ++i) {
            const double a = t_.rows[static_cast<size_t>(i)][static_cast<size_t>(enter)];
            if (a <= kPivotTol) continue;
            const double ratio = t_.rows[static_cast<size_t>(i)][static_cast<size_t>(rhs)] / a;
            if (ratio < best_ratio) best_ratio = ratio;
        }
        if (best_ratio == kInf) return false;  // unbounded ray
        const double ratio_lim = best_ratio + 1e-9 * (1.0 + std::abs(best_ratio));
        double best_piv = 0.0;
        for (int i = 0; i < m; ++i) {
            const double a = t_.rows[static_cast<size_t>(i)][static_cast<size_t>(enter)];
            if (a <= kPivotTol) continue;
            if (t_.rows[static_cast<size_t>(i)][static_cast<size_t>(rhs)] / a > ratio_lim) continue;
            if (bland) {
                if (leave < 0 || t_.basis[static_cast<size_t>(i)] < t_.basis[static_cast<size_t>(leave)])
                    leave = i;
            } else if (a > best_piv) {
                best_piv = a;
                leave = i;
            }
        }

        const double gain = obj[static_cast<size_t>(enter)] * best_ratio;
        pivot(leave, enter, obj);
        collapse_splits();
        // Bland's rule is sticky: once degeneracy forces it on, it stays on,
        // which is what makes termination provable.
        if (!bland && gain <= 1e-12 && ++stall >= kStallLimit) bland = true;
    }
}

LpSolution Simplex::run() {
    const int m = static_cast<int>(t_.rows.size());
    const int rhs_col = t_.ncols;
    LpSolution sol;

    // Phase 1: drive artificials to zero when any exist.
    bool have_art = false;
    for (int i = 0; i < m; ++i)
        if (art_col_[static_cast<size_t>(i)] >= 0) have_art = true;

    if (have_art) {
        std::vector<double> cost1(static_cast<size_t>(t_.ncols), 0.0);
        for (int i = 0; i < m; ++i)
            if (art_col_[static_cast<size_t>(i)] >= 0)
                cost1[static_cast<size_t>(art_col_[static_cast<size_t>(i)])] = -1.0;
        std::vector<double> obj(static_cast<size_t>(t_.ncols) + 1, 0.0);
        for (int j = 0; j < t_.ncols; ++j) obj[static_cast<size_t>(j)] = cost1[static_cast<size_t>(j)];
        for (int i = 0; i < m; ++i) {
            const double cb = cost1[static_cast<size_t>(t_.basis[static_cast<size_t>(i)])];
            if (cb == 0.0) continue;
            for (size_t k = 0; k < obj.size(); ++k)
                obj[k] -= cb * t_.rows[static_cast<size_t>(i)][k];
        }
        iterate(obj, false);
        double art_sum = 0.0;
        for (int i = 0; i < m; ++i) {
            const int b = t_.basis[static_cast<size_t>(i)];
            if (cost1[static_cast<size_t>(b)] != 0.0)
                art_sum += t_.rows[static_cast<size_t>(i)][static_cast<size_t>(rhs_col)];
        }
        if (art_sum > kPhase1Tol) {
            sol.status = LpStatus::Infeasible;
            sol.iterations = iterations_;
            return sol;
        }
        // Pivot remaining basic artificials out, dropping redundant rows.
        for (int i = static_cast<int>(t_.rows.size()) - 1; i >= 0; --i) {
            const int b = t_.basis[static_cast<size_t>(i)];
            if (!banned_[static_cast<size_t>(b)]) continue;
            int col = -1;
            for (int j = 0; j < t_.ncols; ++j) {
                if (banned_[static_cast<size_t>(j)]) continue;
                if (std::abs(t_.rows[static_cast<size_t>(i)][static_cast<size_t>(j)]) > kPivotTol) {
                    col = j;
                    break;
                }
            }
            if (col >= 0) {
                std::vector<double> dummy(static_cast<size_t>(t_.ncols) + 1, 0.0);
                pivot(i, col, dummy);
            } else {
                t_.rows.erase(t_.rows.begin() + i);
                t_.basis.erase(t_.basis.begin() + i);
                slack_col_.erase(slack_col_.begin() + i);
                art_col_.erase(art_col_.begin() + i);
                flipped_.erase(flipped_.begin() + i);
                scale_.erase(scale_.begin() + i);
                row_origin_.erase(row_origin_.begin() + i);
            }
        }
    }

    // Phase 2 objective row rebuilt from the current basis.
    std::vector<double> obj(static_cast<size_t>(t_.ncols) + 1, 0.0);
    for (int j = 0; j < t_.ncols; ++j) obj[static_cast<size_t>(j)] = cost2_[static_cast<size_t>(j)];
    for (size_t i = 0; i < t_.rows.size(); ++i) {
        const double cb = cost2_[static_cast<size_t>(t_.basis[i])];
        if (cb == 0.0) continue;
        for (size_t k = 0; k < obj.size(); ++k) obj[k] -= cb * t_.rows[i][k];
    }
    if (!iterate(obj, true)) {
        sol.status = LpStatus::Unbounded;
        sol.iterations = iterations_;
        return sol;
    }

    sol.values = extract_values();
    sol.objective = 0.0;
    for (size_t j = 0; j < p_.objective.size(); ++j)
        sol.objective += p_.objective[j] * sol.values[j];

    if (goal_reached_) {
        // Stopped at the caller's goal: the basis is feasible and good
        // enough, but not proved optimal, so there are no duals to report.
        sol.status = LpStatus::GoalReached;
        sol.iterations = iterations_;
        return sol;
    }

    // Row duals from the final reduced costs of each row's slack or
    // artificial column, unscaled back to the user's row.
    sol.row_duals.assign(p_.constraints.size(), 0.0);
    for (size_t i = 0; i < t_.rows.size(); ++i) {
        const int origin = row_origin_[i];
        if (origin < 0) continue;
        const int col = art_col_[i] >= 0 ? art_col_[i] : slack_col_[i];
        if (col < 0) continue;
        double d = -obj[static_cast<size_t>(col)];
        if (flipped_[i]) d = -d;
        sol.row_duals[static_cast<size_t>(origin)] = d / scale_[i];
    }

    sol.status = LpStatus::Optimal;
    sol.iterations = iterations_;
    return sol;
}

std::vector<double> Simplex::extract_values() const {
    // Canonical basic values, transforms undone per variable.
    std::vector<double> canon(static_cast<size_t>(t_.ncols), 0.0);
    for (size_t i = 0; i < t_.rows.size(); ++i)
        canon[static_cast<size_t>(t_.basis[i])] =
            t_.rows[i][static_cast<size_t>(t_.ncols)];

    std::vector<double> values(p_.variables.size(), 0.0);
    for (size_t j = 0; j < p_.variables.size(); ++j) {
        const ColMap& mp = cmap_[j];
        switch (mp.kind) {
        case ColMap::Shifted:
            values[j] = canon[static_cast<size_t>(mp.col)] + mp.offset;
            break;
        case ColMap::Flipped:
            values[j] = mp.offset - canon[static_cast<size_t>(mp.col)];
            break;
        case ColMap::Split:
            values[j] =
                canon[static_cast<size_t>(mp.col)] - canon[static_cast<size_t>(mp.col_neg)];
            break;
        case ColMap::Fixed:
            values[j] = mp.offset;
            break;
        }
    }
    return values;
}

} // namespace

LpSolution solve(const LpProblem& p) {
    p.validate();
    if (g_dump_sink) dump_problem(*g_dump_sink, p);
    Simplex s(p);
    return s.run();
}

double max_violation(const LpProblem& p, const std::vector<double>& x) {
    if (x.size() != p.variables.size())
        throw dimension_error("point length does not match variable count");
    double worst = 0.0;
    for (const auto& c : p.constraints) {
        double acc = -c.rhs, s = 1.0;
        for (size_t j = 0; j < x.size(); ++j) {
            acc += c.coeffs[j] * x[j];
            s = std::max(s, std::abs(c.coeffs[j]));
        }
        const double v = c.rel == Relation::Eq ? std::abs(acc) : acc;
        worst = std::max(worst, v / s);
    }
    for (size_t j = 0; j < x.size(); ++j) {
        worst = std::max(worst, p.variables[j].lo - x[j]);
        worst = std::max(worst, x[j] - p.variables[j].hi);
    }
    return std::max(worst, 0.0);
}

FeasibilityBuilder::FeasibilityBuilder() {
    // The margin variable is pinned to 1, which normalizes the homogeneous
    // cone: strict rows become "sum <= -scale" and positivity "x >= 1".
    // Solving is then plain phase-1 feasibility with no degenerate apex at
    // the origin, and scaling any strict solution recovers the equivalence.
    problem_.add_variable("t", 1.0, 1.0);
}

int FeasibilityBuilder::add_variable(const std::string& name) {
    return problem_.add_variable(name, -kInf, kInf);
}

int FeasibilityBuilder::add_variable(const std::string& name, double lo, double hi) {
    return problem_.add_variable(name, lo, hi);
}

void FeasibilityBuilder::require_positive(int var) {
    problem_.add_row({{margin_var(), 1.0}, {var, -1.0}}, Relation::LessEq, 0.0);
}

void FeasibilityBuilder::add_strict(const std::vector<std::pair<int, double>>& terms) {
    double s = 0.0;
    for (auto [idx, val] : terms) {
        (void)idx;
        s = std::max(s, std::abs(val));
    }
    if (s == 0.0) s = 1.0;
    auto row = terms;
    row.emplace_back(margin_var(), s);
    problem_.add_row(row, Relation::LessEq, 0.0);
}

void FeasibilityBuilder::add_leq(const std::vector<std::pair<int, double>>& terms, double rhs) {
    problem_.add_row(terms, Relation::LessEq, rhs);
}

void FeasibilityBuilder::add_eq(const std::vector<std::pair<int, double>>& terms, double rhs) {
    problem_.add_row(terms, Relation::Eq, rhs);
}

FeasibilityResult FeasibilityBuilder::solve_max_margin() {
    problem_.objective.clear();
    const auto start = std::chrono::steady_clock::now();
    LpSolution s = solve(problem_);
    const auto stop = std::chrono::steady_clock::now();

    FeasibilityResult r;
    r.status = s.status;
    r.rows = rows();
    r.cols = cols();
    r.seconds = std::chrono::duration<double>(stop - start).count();
    if (s.status == LpStatus::Optimal || s.status == LpStatus::GoalReached) {
        r.witness = s.values;
        r.margin = witness_margin(s.values);
        // Two gates: the strict rows must have genuine slack, and every row
        // of the program must hold to solver precision. The second gate
        // matters because near-infeasible cones admit points that satisfy
        // the strict rows comfortably while violating an interior row by
        // 1e-8 or so; accepting those would report thresholds well below
        // the true ones.
        r.feasible = r.margin > 0.0 && max_violation(problem_, s.values) <= kWitnessTol;
    }
    return r;
}

double FeasibilityBuilder::witness_margin(const std::vector<double>& x) const {
    // Scale-invariant slack of the witness: the worst row slack relative to
    // the margin coefficient, divided by the certificate's own size. The
    // normalized program guarantees at least 1 / max(1, |x|_inf).
    double scale = 1.0;
    for (size_t j = 1; j < x.size(); ++j) scale = std::max(scale, std::abs(x[j]));
    double worst = kInf;
    for (const auto& c : problem_.constraints) {
        const double u = c.coeffs[0];  // margin-variable coefficient
        if (u <= 0.0 || c.rel != Relation::LessEq) continue;
        double acc = 0.0;
        for (size_t j = 1; j < x.size(); ++j) acc += c.coeffs[j] * x[j];
        worst = std::min(worst, (c.rhs - acc) / u);  // sum + u t <= rhs
    }
    if (worst == kInf) return 1.0;  // no margin-bearing rows
    return std::min(1.0, worst / scale);
}

} // namespace posidwell
