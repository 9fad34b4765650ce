#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace vpe {

struct Vec2
{
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr double operator[](int i) const { return i == 0 ? x : y; }
    constexpr double& operator[](int i) { return i == 0 ? x : y; }

    constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr bool operator==(const Vec2&) const = default;

    double norm() const { return std::hypot(x, y); }
    constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Row-major 2x2 matrix: [[a, b], [c, d]].
struct Mat2
{
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 diag(double p, double q) { return {p, 0.0, 0.0, q}; }
    static constexpr Mat2 columns(const Vec2& c0, const Vec2& c1) { return {c0.x, c1.x, c0.y, c1.y}; }

    constexpr double det() const { return a * d - b * c; }
    constexpr Vec2 col(int j) const { return j == 0 ? Vec2{a, c} : Vec2{b, d}; }

    constexpr Mat2 operator*(const Mat2& o) const
    {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    constexpr Vec2 operator*(const Vec2& v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    constexpr Mat2 operator-(const Mat2& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
    constexpr Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }

    Mat2 inverse() const
    {
        const double q = det();
        return {d / q, -b / q, -c / q, a / q};
    }
    double max_abs() const { return std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)}); }
    bool finite() const
    {
        return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d);
    }
};

/// Extended positive reals (0, inf]. Infinity is a distinguished state, never a large double.
class Extended
{
public:
    constexpr Extended() = default;
    constexpr explicit Extended(double v) : value_(v) {}
    static constexpr Extended infinity()
    {
        Extended e;
        e.infinite_ = true;
        return e;
    }
    static constexpr Extended negative_infinity()
    {
        Extended e;
        e.infinite_ = true;
        e.negative_ = true;
        return e;
    }
    constexpr Extended negated() const
    {
        Extended e = *this;
        if (infinite_) e.negative_ = !negative_;
        else e.value_ = -value_;
        return e;
    }

    constexpr bool is_infinite() const { return infinite_; }
    constexpr bool is_finite() const { return !infinite_; }
    constexpr bool is_negative_infinity() const { return infinite_ && negative_; }
    constexpr bool is_positive_infinity() const { return infinite_ && !negative_; }
    /// Finite value; ±inf as a double when infinite (for arithmetic in limits only).
    constexpr double value() const
    {
        if (!infinite_) return value_;
        return negative_ ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    }

    friend constexpr bool operator<(const Extended& l, const Extended& r)
    {
        if (l == r) return false;
        return l.value() < r.value();
    }
    friend constexpr bool operator==(const Extended& l, const Extended& r)
    {
        if (l.infinite_ || r.infinite_) return l.infinite_ == r.infinite_ && l.negative_ == r.negative_;
        return l.value_ == r.value_;
    }

private:
    double value_ = 0.0;
    bool infinite_ = false;
    bool negative_ = false;
};

inline Vec2 unit_direction(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Angle of v in [0, 2pi).
inline double polar_angle(const Vec2& v)
{
    double t = std::atan2(v.y, v.x);
    if (t < 0.0) t += 2.0 * std::numbers::pi;
    if (t >= 2.0 * std::numbers::pi) t = 0.0;
    return t;
}

} // namespace vpe
