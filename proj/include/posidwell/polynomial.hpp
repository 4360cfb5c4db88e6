#pragma once

#include <cmath>
#include <vector>

#include "posidwell/errors.hpp"

namespace posidwell {

/// Univariate polynomial with coefficients in ascending powers.
class Poly {
public:
    Poly() : c_{0.0} {}
    explicit Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) {
        if (c_.empty()) c_.push_back(0.0);
        for (double v : c_)
            if (!std::isfinite(v)) throw domain_error("polynomial coefficient must be finite");
    }
    static Poly constant(double v) { return Poly(std::vector<double>{v}); }

    const std::vector<double>& coeffs() const { return c_; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }

    double operator()(double x) const {
        double acc = 0.0;
        for (size_t k = c_.size(); k-- > 0;) acc = acc * x + c_[k];
        return acc;
    }

    Poly derivative() const {
        if (c_.size() <= 1) return Poly();
        std::vector<double> d(c_.size() - 1);
        for (size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
        return Poly(std::move(d));
    }

    friend Poly operator+(const Poly& a, const Poly& b) {
        std::vector<double> r(std::max(a.c_.size(), b.c_.size()), 0.0);
        for (size_t k = 0; k < a.c_.size(); ++k) r[k] += a.c_[k];
        for (size_t k = 0; k < b.c_.size(); ++k) r[k] += b.c_[k];
        return Poly(std::move(r));
    }

    friend Poly operator*(const Poly& a, const Poly& b) {
        std::vector<double> r(a.c_.size() + b.c_.size() - 1, 0.0);
        for (size_t i = 0; i < a.c_.size(); ++i)
            for (size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
        return Poly(std::move(r));
    }

    friend Poly operator*(double s, const Poly& a) {
        std::vector<double> r(a.c_);
        for (double& v : r) v *= s;
        return Poly(std::move(r));
    }

    /// Substitutes x -> alpha + beta * y, returning the polynomial in y.
    Poly compose_affine(double alpha, double beta) const {
        Poly result = Poly::constant(c_.back());
        Poly lin(std::vector<double>{alpha, beta});
        for (size_t k = c_.size() - 1; k-- > 0;) result = result * lin + Poly::constant(c_[k]);
        return result;
    }

private:
    std::vector<double> c_;
};

} // namespace posidwell
