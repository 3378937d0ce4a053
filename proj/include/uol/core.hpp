#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace uol {

/// A point (or vector) in the plane.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

using Vec2 = Point;

inline constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline constexpr Point operator-(Point a) { return {-a.x, -a.y}; }
inline constexpr Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline constexpr Point operator*(Point a, double s) { return {s * a.x, s * a.y}; }
inline constexpr Point operator/(Point a, double s) { return {a.x / s, a.y / s}; }
inline constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

/// Unit vector at polar angle theta.
inline Point polar(double theta) { return {std::cos(theta), std::sin(theta)}; }

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A query point, ball or shell leaves the grid's physical extent.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An operation was called outside its stated preconditions.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// An iterative method stopped without meeting its tolerance.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double last_residual, int iterations)
        : Error(what), last_residual_(last_residual), iterations_(iterations) {}

    double last_residual() const noexcept { return last_residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    int iterations_;
};

/// Zero of grad u on the free boundary where a non-degenerate gradient was required.
class DegenerateFreeBoundary : public Error {
public:
    DegenerateFreeBoundary(const std::string& what, Point where, double gradient)
        : Error(what), where_(where), gradient_(gradient) {}

    Point where() const noexcept { return where_; }
    double gradient() const noexcept { return gradient_; }

private:
    Point where_;
    double gradient_;
};

}  // namespace uol
