#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>

namespace clab {

// Coordinate vector with inline storage. Model dimensions are tiny (a torus
// point has n entries, a sphere point n+1), so no heap traffic in flow loops.
class Vec {
public:
    static constexpr std::size_t kMaxDim = 8;

    Vec() = default;
    explicit Vec(std::size_t n) : n_(n) { assert(n <= kMaxDim); }
    Vec(std::initializer_list<double> xs) : n_(xs.size()) {
        assert(n_ <= kMaxDim);
        std::size_t i = 0;
        for (double x : xs) v_[i++] = x;
    }

    std::size_t size() const { return n_; }
    double operator[](std::size_t i) const { return v_[i]; }
    double& operator[](std::size_t i) { return v_[i]; }

    Vec& operator+=(const Vec& o) {
        for (std::size_t i = 0; i < n_; ++i) v_[i] += o.v_[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (std::size_t i = 0; i < n_; ++i) v_[i] -= o.v_[i];
        return *this;
    }
    Vec& operator*=(double s) {
        for (std::size_t i = 0; i < n_; ++i) v_[i] *= s;
        return *this;
    }

    friend Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend Vec operator*(double s, Vec a) { return a *= s; }
    friend Vec operator*(Vec a, double s) { return a *= s; }

    friend double dot(const Vec& a, const Vec& b) {
        double s = 0;
        for (std::size_t i = 0; i < a.n_; ++i) s += a.v_[i] * b.v_[i];
        return s;
    }

    double squared_norm() const { return dot(*this, *this); }
    double norm() const { return std::sqrt(squared_norm()); }

    Vec normalized() const {
        Vec r = *this;
        double n = norm();
        if (n > 0) r *= 1.0 / n;
        return r;
    }

private:
    std::array<double, kMaxDim> v_{};
    std::size_t n_ = 0;
};

}  // namespace clab
