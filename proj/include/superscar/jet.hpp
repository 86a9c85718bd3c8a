#pragma once

#include <cmath>

namespace superscar {

/// Second-order forward-mode jet in two variables (R, theta).
///
/// Carries the value, the gradient and the upper triangle of the Hessian.
/// Analytic surfaces are written once as templates over the scalar type and
/// evaluated with `double` for values or `Jet2` for derivatives.
struct Jet2 {
    double v = 0.0;
    double d0 = 0.0, d1 = 0.0;
    double h00 = 0.0, h01 = 0.0, h11 = 0.0;

    constexpr Jet2() = default;
    constexpr Jet2(double value) : v(value) {} // NOLINT: implicit constants

    static constexpr Jet2 variable(double value, int index) {
        Jet2 j(value);
        (index == 0 ? j.d0 : j.d1) = 1.0;
        return j;
    }

    Jet2& operator+=(const Jet2& o) {
        v += o.v; d0 += o.d0; d1 += o.d1;
        h00 += o.h00; h01 += o.h01; h11 += o.h11;
        return *this;
    }
    Jet2& operator-=(const Jet2& o) {
        v -= o.v; d0 -= o.d0; d1 -= o.d1;
        h00 -= o.h00; h01 -= o.h01; h11 -= o.h11;
        return *this;
    }
    Jet2& operator*=(double s) {
        v *= s; d0 *= s; d1 *= s;
        h00 *= s; h01 *= s; h11 *= s;
        return *this;
    }
};

// Apply a scalar function given f, f', f'' at a.v.
inline Jet2 chain(const Jet2& a, double f, double df, double ddf) {
    Jet2 r;
    r.v = f;
    r.d0 = df * a.d0;
    r.d1 = df * a.d1;
    r.h00 = df * a.h00 + ddf * a.d0 * a.d0;
    r.h01 = df * a.h01 + ddf * a.d0 * a.d1;
    r.h11 = df * a.h11 + ddf * a.d1 * a.d1;
    return r;
}

inline Jet2 operator-(const Jet2& a) {
    Jet2 r = a;
    r *= -1.0;
    return r;
}
inline Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
inline Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
inline Jet2 operator+(Jet2 a, double b) { a.v += b; return a; }
inline Jet2 operator+(double b, Jet2 a) { a.v += b; return a; }
inline Jet2 operator-(Jet2 a, double b) { a.v -= b; return a; }
inline Jet2 operator-(double b, const Jet2& a) { return -a + b; }
inline Jet2 operator*(Jet2 a, double s) { return a *= s; }
inline Jet2 operator*(double s, Jet2 a) { return a *= s; }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
    Jet2 r;
    r.v = a.v * b.v;
    r.d0 = a.d0 * b.v + a.v * b.d0;
    r.d1 = a.d1 * b.v + a.v * b.d1;
    r.h00 = a.h00 * b.v + 2.0 * a.d0 * b.d0 + a.v * b.h00;
    r.h01 = a.h01 * b.v + a.d0 * b.d1 + a.d1 * b.d0 + a.v * b.h01;
    r.h11 = a.h11 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.h11;
    return r;
}

inline Jet2 reciprocal(const Jet2& a) {
    const double inv = 1.0 / a.v;
    return chain(a, inv, -inv * inv, 2.0 * inv * inv * inv);
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }
inline Jet2 operator/(Jet2 a, double s) { return a *= 1.0 / s; }
inline Jet2 operator/(double s, const Jet2& a) { return s * reciprocal(a); }

inline Jet2 sin(const Jet2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return chain(a, s, c, -s);
}
inline Jet2 cos(const Jet2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return chain(a, c, -s, -c);
}
inline Jet2 exp(const Jet2& a) {
    const double e = std::exp(a.v);
    return chain(a, e, e, e);
}
inline Jet2 log(const Jet2& a) {
    return chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}
inline Jet2 sqrt(const Jet2& a) {
    const double s = std::sqrt(a.v);
    return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet2 pow(const Jet2& a, double p) {
    const double f = std::pow(a.v, p);
    return chain(a, f, p * std::pow(a.v, p - 1.0), p * (p - 1.0) * std::pow(a.v, p - 2.0));
}
inline Jet2 square(const Jet2& a) { return a * a; }
inline double square(double a) { return a * a; }

} // namespace superscar
