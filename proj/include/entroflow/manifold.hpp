#ifndef ENTROFLOW_MANIFOLD_HPP
#define ENTROFLOW_MANIFOLD_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "entroflow/linalg.hpp"

namespace entroflow {

/// Spaces used by the example systems.
///
///  - Torus2:     unit 2-torus, coords (x1, x2) in [0,1)^2
///  - Circle:     unit circle, coord s in [0,1)
///  - Suspension: mapping torus of the cat map with roof one,
///                coords (x1, x2, tau), identification (x, 1) ~ (A x, 0)
///  - ProductNS:  Suspension x Circle, coords (x1, x2, tau, s)
///  - Annulus:    [-delta, delta] x Circle, coords (y, z)
///  - ProductTA:  Torus2 x Annulus, coords (x1, x2, y, z)
enum class SpaceKind : std::uint8_t { Torus2, Circle, Suspension, ProductNS, Annulus, ProductTA };

struct Space {
    SpaceKind kind = SpaceKind::Torus2;
    double delta = 0.1;  // annulus half-width; meaningful for Annulus / ProductTA

    static Space torus2() { return {SpaceKind::Torus2, 0.0}; }
    static Space circle() { return {SpaceKind::Circle, 0.0}; }
    static Space suspension() { return {SpaceKind::Suspension, 0.0}; }
    static Space product_ns() { return {SpaceKind::ProductNS, 0.0}; }
    static Space annulus(double delta = 0.1) { return {SpaceKind::Annulus, delta}; }
    static Space product_ta(double delta = 0.1) { return {SpaceKind::ProductTA, delta}; }
};

int space_dim(const Space& s);
bool same_space(const Space& a, const Space& b);
std::string space_name(const Space& s);

/// A point on one of the quotient spaces, stored as canonical chart
/// coordinates (periodic coordinates in [0,1), annulus y in [-delta, delta]).
struct Point {
    Space space;
    Chart x = chart_zero();

    static Point torus2(double x1, double x2);
    static Point circle(double s);
    static Point suspension(double x1, double x2, double tau);
    static Point product_ns(double x1, double x2, double tau, double s);
    static Point annulus(double y, double z, double delta = 0.1);
    static Point product_ta(double x1, double x2, double y, double z, double delta = 0.1);
};

/// Tangent vector in the flat chart at `base`; component count equals the
/// space dimension.
struct TangentVector {
    Point base;
    Chart v = chart_zero();
};

/// Cat map A = [[2,1],[1,1]] acting on the torus factor; the suspension
/// identification uses it, so it lives with the manifold code.
void cat_base_apply(double& x1, double& x2);
void cat_base_apply_inv(double& x1, double& x2);

double wrap01(double x);

/// Signed circle offset of b relative to a, in (-1/2, 1/2].
double circle_offset(double a, double b);

/// Wraps periodic coordinates, reduces the suspension roof to [0,1) applying
/// the cat map once per unit crossed. Throws std::domain_error if an annulus
/// coordinate lies outside [-delta, delta] or any coordinate is non-finite.
Point canonicalize(const Point& p);

/// Quotient metric. Flat wrapped-Euclidean per factor; on the suspension the
/// minimum over crossing the roof identification 0 or +-1 times. Throws
/// std::invalid_argument on mismatched spaces.
double dist(const Point& p, const Point& q);

/// dist for inputs already in canonical form (no wrapping or space check);
/// the hot loops of the estimators use this.
double dist_canonical(const Point& p, const Point& q);

/// canonicalize, additionally reporting the derivative of the chart change
/// (identity for plain wraps; the cat-map block when the suspension roof
/// crosses the identification). If `transition` is non-null it is
/// left-multiplied by that derivative, which is what a tangent frame carried
/// alongside the point needs.
Point canonicalize_tracked(const Point& p, Mat* transition);

/// Deterministic regular lattice, lexicographically ordered with the first
/// axis most significant; one resolution entry per axis.
std::vector<Point> sample_grid(const Space& s, const std::vector<int>& resolution);

/// Deterministic low-discrepancy (Halton) point set; an alternative seed set
/// for estimators on higher-dimensional spaces.
std::vector<Point> halton_grid(const Space& s, int count);

/// p + dx in the chart, canonicalized.
Point chart_translate(const Point& p, const Chart& dx);

/// Interpolation between nearby points (fraction f in [0,1]), unwrapping
/// periodic coordinates and the suspension identification so that the
/// segment follows the short way around. Intended for dist(p,q) well below
/// the injectivity scale (~1/2).
Point lerp_on(const Point& p, const Point& q, double f);

/// Represents q in the flat chart around p (coordinates may leave their
/// canonical ranges). lerp_on and polyline refinement build on this.
Chart align_chart(const Point& p, const Point& q);

struct AxisInfo {
    double lo = 0.0;
    double hi = 1.0;
    bool periodic = true;
};

/// Chart axes of the space, in coordinate order.
std::vector<AxisInfo> space_axes(const Space& s);

}  // namespace entroflow

#endif
