#include "entroflow/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace entroflow {

int space_dim(const Space& s) {
    switch (s.kind) {
        case SpaceKind::Torus2: return 2;
        case SpaceKind::Circle: return 1;
        case SpaceKind::Suspension: return 3;
        case SpaceKind::ProductNS: return 4;
        case SpaceKind::Annulus: return 2;
        case SpaceKind::ProductTA: return 4;
    }
    return 0;
}

bool same_space(const Space& a, const Space& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == SpaceKind::Annulus || a.kind == SpaceKind::ProductTA)
        return a.delta == b.delta;
    return true;
}

std::string space_name(const Space& s) {
    switch (s.kind) {
        case SpaceKind::Torus2: return "torus2";
        case SpaceKind::Circle: return "circle";
        case SpaceKind::Suspension: return "suspension";
        case SpaceKind::ProductNS: return "product_ns";
        case SpaceKind::Annulus: return "annulus";
        case SpaceKind::ProductTA: return "product_ta";
    }
    return "?";
}

Point Point::torus2(double x1, double x2) {
    return canonicalize(Point{Space::torus2(), {x1, x2, 0, 0}});
}
Point Point::circle(double s) { return canonicalize(Point{Space::circle(), {s, 0, 0, 0}}); }
Point Point::suspension(double x1, double x2, double tau) {
    return canonicalize(Point{Space::suspension(), {x1, x2, tau, 0}});
}
Point Point::product_ns(double x1, double x2, double tau, double s) {
    return canonicalize(Point{Space::product_ns(), {x1, x2, tau, s}});
}
Point Point::annulus(double y, double z, double delta) {
    return canonicalize(Point{Space::annulus(delta), {y, z, 0, 0}});
}
Point Point::product_ta(double x1, double x2, double y, double z, double delta) {
    return canonicalize(Point{Space::product_ta(delta), {x1, x2, y, z}});
}

void cat_base_apply(double& x1, double& x2) {
    const double a = 2.0 * x1 + x2;
    const double b = x1 + x2;
    x1 = wrap01(a);
    x2 = wrap01(b);
}

void cat_base_apply_inv(double& x1, double& x2) {
    // A^{-1} = [[1,-1],[-1,2]]
    const double a = x1 - x2;
    const double b = -x1 + 2.0 * x2;
    x1 = wrap01(a);
    x2 = wrap01(b);
}

double wrap01(double x) {
    double w = x - std::floor(x);
    if (w >= 1.0) w -= 1.0;  // guards x = -1e-17 rounding to 1.0
    return w;
}

double circle_offset(double a, double b) {
    double d = wrap01(b - a);
    if (d > 0.5) d -= 1.0;
    return d;
}

namespace {

double circle_gap(double a, double b) {
    double d = std::abs(a - b);
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
}

void check_finite(const Point& p, int dim) {
    for (int i = 0; i < dim; ++i)
        if (!std::isfinite(p.x[i])) throw std::domain_error("non-finite coordinate");
}

void check_annulus_y(double y, double delta) {
    if (std::abs(y) > delta)
        throw std::domain_error("annulus coordinate outside [-delta, delta]");
}

// base distance candidates across the roof identification (x,1) ~ (Ax,0)
double suspension_dist(const Chart& p, const Chart& q) {
    const double d1p = circle_gap(p[0], q[0]);
    const double d2p = circle_gap(p[1], q[1]);
    const double dt = p[2] - q[2];
    double best = d1p * d1p + d2p * d2p + dt * dt;

    // q crossed up: q ~ (A q_base, tau_q - 1)
    {
        double b1 = q[0], b2 = q[1];
        cat_base_apply(b1, b2);
        const double d1 = circle_gap(p[0], b1);
        const double d2 = circle_gap(p[1], b2);
        const double dtau = p[2] - (q[2] - 1.0);
        best = std::min(best, d1 * d1 + d2 * d2 + dtau * dtau);
    }
    // q crossed down: q ~ (A^{-1} q_base, tau_q + 1)
    {
        double b1 = q[0], b2 = q[1];
        cat_base_apply_inv(b1, b2);
        const double d1 = circle_gap(p[0], b1);
        const double d2 = circle_gap(p[1], b2);
        const double dtau = p[2] - (q[2] + 1.0);
        best = std::min(best, d1 * d1 + d2 * d2 + dtau * dtau);
    }
    return best;  // squared
}

}  // namespace

namespace {

// range checks fail for NaN, so canonical implies finite
bool is_canonical(const Point& p) {
    switch (p.space.kind) {
        case SpaceKind::Torus2:
            return p.x[0] >= 0.0 && p.x[0] < 1.0 && p.x[1] >= 0.0 && p.x[1] < 1.0;
        case SpaceKind::Circle:
            return p.x[0] >= 0.0 && p.x[0] < 1.0;
        case SpaceKind::Suspension:
            return p.x[0] >= 0.0 && p.x[0] < 1.0 && p.x[1] >= 0.0 && p.x[1] < 1.0 &&
                   p.x[2] >= 0.0 && p.x[2] < 1.0;
        case SpaceKind::ProductNS:
            return p.x[0] >= 0.0 && p.x[0] < 1.0 && p.x[1] >= 0.0 && p.x[1] < 1.0 &&
                   p.x[2] >= 0.0 && p.x[2] < 1.0 && p.x[3] >= 0.0 && p.x[3] < 1.0;
        case SpaceKind::Annulus:
            return std::abs(p.x[0]) <= p.space.delta && p.x[1] >= 0.0 && p.x[1] < 1.0;
        case SpaceKind::ProductTA:
            return p.x[0] >= 0.0 && p.x[0] < 1.0 && p.x[1] >= 0.0 && p.x[1] < 1.0 &&
                   std::abs(p.x[2]) <= p.space.delta && p.x[3] >= 0.0 && p.x[3] < 1.0;
    }
    return false;
}

}  // namespace

Point canonicalize(const Point& p) {
    if (is_canonical(p)) return p;
    const int dim = space_dim(p.space);
    check_finite(p, dim);
    Point r = p;
    switch (p.space.kind) {
        case SpaceKind::Torus2:
            r.x[0] = wrap01(r.x[0]);
            r.x[1] = wrap01(r.x[1]);
            break;
        case SpaceKind::Circle:
            r.x[0] = wrap01(r.x[0]);
            break;
        case SpaceKind::Suspension:
        case SpaceKind::ProductNS: {
            double k = std::floor(r.x[2]);
            r.x[2] -= k;
            if (r.x[2] >= 1.0) {  // rounding guard
                r.x[2] -= 1.0;
                k += 1.0;
            }
            for (; k >= 1.0; k -= 1.0) cat_base_apply(r.x[0], r.x[1]);
            for (; k <= -1.0; k += 1.0) cat_base_apply_inv(r.x[0], r.x[1]);
            r.x[0] = wrap01(r.x[0]);
            r.x[1] = wrap01(r.x[1]);
            if (p.space.kind == SpaceKind::ProductNS) r.x[3] = wrap01(r.x[3]);
            break;
        }
        case SpaceKind::Annulus:
            check_annulus_y(r.x[0], p.space.delta);
            r.x[1] = wrap01(r.x[1]);
            break;
        case SpaceKind::ProductTA:
            r.x[0] = wrap01(r.x[0]);
            r.x[1] = wrap01(r.x[1]);
            check_annulus_y(r.x[2], p.space.delta);
            r.x[3] = wrap01(r.x[3]);
            break;
    }
    return r;
}

Point canonicalize_tracked(const Point& p, Mat* transition) {
    const bool susp =
        p.space.kind == SpaceKind::Suspension || p.space.kind == SpaceKind::ProductNS;
    if (!susp || transition == nullptr) return canonicalize(p);

    const double k = std::floor(p.x[2]);
    const Point r = canonicalize(p);
    if (k == 0.0) return r;

    // chart change (x, tau) -> (A^k x, tau - k); derivative is A^k on the
    // base block
    Mat d = Mat::identity(transition->n);
    long n = long(k);
    const bool inv = n < 0;
    if (inv) n = -n;
    double m00 = 1, m01 = 0, m10 = 0, m11 = 1;
    double b00 = inv ? 1 : 2, b01 = inv ? -1 : 1, b10 = inv ? -1 : 1, b11 = inv ? 2 : 1;
    while (n > 0) {
        if (n & 1) {
            const double t00 = b00 * m00 + b01 * m10, t01 = b00 * m01 + b01 * m11;
            const double t10 = b10 * m00 + b11 * m10, t11 = b10 * m01 + b11 * m11;
            m00 = t00; m01 = t01; m10 = t10; m11 = t11;
        }
        const double t00 = b00 * b00 + b01 * b10, t01 = b00 * b01 + b01 * b11;
        const double t10 = b10 * b00 + b11 * b10, t11 = b10 * b01 + b11 * b11;
        b00 = t00; b01 = t01; b10 = t10; b11 = t11;
        n >>= 1;
    }
    d.a[0][0] = m00; d.a[0][1] = m01;
    d.a[1][0] = m10; d.a[1][1] = m11;
    *transition = d.mul(*transition);
    return r;
}

double dist(const Point& pp, const Point& qq) {
    if (!same_space(pp.space, qq.space))
        throw std::invalid_argument("dist: mismatched spaces");
    return dist_canonical(canonicalize(pp), canonicalize(qq));
}

double dist_canonical(const Point& p, const Point& q) {
    switch (p.space.kind) {
        case SpaceKind::Torus2: {
            const double d1 = circle_gap(p.x[0], q.x[0]);
            const double d2 = circle_gap(p.x[1], q.x[1]);
            return std::sqrt(d1 * d1 + d2 * d2);
        }
        case SpaceKind::Circle:
            return circle_gap(p.x[0], q.x[0]);
        case SpaceKind::Suspension:
            return std::sqrt(suspension_dist(p.x, q.x));
        case SpaceKind::ProductNS: {
            const double dn2 = suspension_dist(p.x, q.x);
            const double ds = circle_gap(p.x[3], q.x[3]);
            return std::sqrt(dn2 + ds * ds);
        }
        case SpaceKind::Annulus: {
            const double dy = p.x[0] - q.x[0];
            const double dz = circle_gap(p.x[1], q.x[1]);
            return std::sqrt(dy * dy + dz * dz);
        }
        case SpaceKind::ProductTA: {
            const double d1 = circle_gap(p.x[0], q.x[0]);
            const double d2 = circle_gap(p.x[1], q.x[1]);
            const double dy = p.x[2] - q.x[2];
            const double dz = circle_gap(p.x[3], q.x[3]);
            return std::sqrt(d1 * d1 + d2 * d2 + dy * dy + dz * dz);
        }
    }
    return 0.0;
}

std::vector<AxisInfo> space_axes(const Space& s) {
    const AxisInfo per{0.0, 1.0, true};
    switch (s.kind) {
        case SpaceKind::Torus2: return {per, per};
        case SpaceKind::Circle: return {per};
        case SpaceKind::Suspension: return {per, per, per};
        case SpaceKind::ProductNS: return {per, per, per, per};
        case SpaceKind::Annulus: return {{-s.delta, s.delta, false}, per};
        case SpaceKind::ProductTA: return {per, per, {-s.delta, s.delta, false}, per};
    }
    return {};
}

std::vector<Point> sample_grid(const Space& s, const std::vector<int>& resolution) {
    const auto axes = space_axes(s);
    if (resolution.size() != axes.size())
        throw std::invalid_argument("sample_grid: one resolution per axis required");
    for (int r : resolution)
        if (r < 1) throw std::invalid_argument("sample_grid: resolution must be >= 1");

    const int dim = int(axes.size());
    std::size_t total = 1;
    for (int r : resolution) total *= std::size_t(r);

    std::vector<Point> out;
    out.reserve(total);
    std::vector<int> idx(dim, 0);
    for (std::size_t c = 0; c < total; ++c) {
        Point p;
        p.space = s;
        for (int a = 0; a < dim; ++a) {
            const auto& ax = axes[a];
            const int n = resolution[a];
            double v;
            if (ax.periodic) {
                v = ax.lo + (ax.hi - ax.lo) * double(idx[a]) / double(n);
            } else {
                // closed interval, endpoints included; a single point sits at
                // the center
                v = (n == 1) ? 0.5 * (ax.lo + ax.hi)
                             : ax.lo + (ax.hi - ax.lo) * double(idx[a]) / double(n - 1);
            }
            p.x[a] = v;
        }
        out.push_back(canonicalize(p));
        for (int a = dim - 1; a >= 0; --a) {  // first axis most significant
            if (++idx[a] < resolution[a]) break;
            idx[a] = 0;
        }
    }
    return out;
}

namespace {
double halton(std::uint64_t i, std::uint64_t base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= double(base);
        r += f * double(i % base);
        i /= base;
    }
    return r;
}
}  // namespace

std::vector<Point> halton_grid(const Space& s, int count) {
    if (count < 1) throw std::invalid_argument("halton_grid: count must be >= 1");
    const auto axes = space_axes(s);
    static const std::uint64_t primes[kMaxDim] = {2, 3, 5, 7};
    std::vector<Point> out;
    out.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) {
        Point p;
        p.space = s;
        for (int a = 0; a < int(axes.size()); ++a) {
            const double u = halton(std::uint64_t(i) + 1, primes[a]);
            p.x[a] = axes[a].lo + (axes[a].hi - axes[a].lo) * u;
        }
        out.push_back(canonicalize(p));
    }
    return out;
}

Chart align_chart(const Point& pp, const Point& qq) {
    const Point p = canonicalize(pp);
    const Point q = canonicalize(qq);
    Chart r = q.x;
    switch (p.space.kind) {
        case SpaceKind::Torus2:
            r[0] = p.x[0] + circle_offset(p.x[0], q.x[0]);
            r[1] = p.x[1] + circle_offset(p.x[1], q.x[1]);
            break;
        case SpaceKind::Circle:
            r[0] = p.x[0] + circle_offset(p.x[0], q.x[0]);
            break;
        case SpaceKind::Suspension:
        case SpaceKind::ProductNS: {
            // pick the roof representative of q nearest to p, twisting the
            // base by A^{+-1} when it crosses the identification
            double b1 = q.x[0], b2 = q.x[1], tau = q.x[2];
            const double direct = std::abs(q.x[2] - p.x[2]);
            const double up = std::abs((q.x[2] - 1.0) - p.x[2]);
            const double down = std::abs((q.x[2] + 1.0) - p.x[2]);
            if (up < direct && up <= down) {
                cat_base_apply(b1, b2);
                tau = q.x[2] - 1.0;
            } else if (down < direct && down < up) {
                cat_base_apply_inv(b1, b2);
                tau = q.x[2] + 1.0;
            }
            r[0] = p.x[0] + circle_offset(p.x[0], b1);
            r[1] = p.x[1] + circle_offset(p.x[1], b2);
            r[2] = tau;
            if (p.space.kind == SpaceKind::ProductNS)
                r[3] = p.x[3] + circle_offset(p.x[3], q.x[3]);
            break;
        }
        case SpaceKind::Annulus:
            r[0] = q.x[0];
            r[1] = p.x[1] + circle_offset(p.x[1], q.x[1]);
            break;
        case SpaceKind::ProductTA:
            r[0] = p.x[0] + circle_offset(p.x[0], q.x[0]);
            r[1] = p.x[1] + circle_offset(p.x[1], q.x[1]);
            r[2] = q.x[2];
            r[3] = p.x[3] + circle_offset(p.x[3], q.x[3]);
            break;
    }
    return r;
}

Point chart_translate(const Point& p, const Chart& dx) {
    Point r = p;
    const int dim = space_dim(p.space);
    for (int i = 0; i < dim; ++i) r.x[i] += dx[i];
    return canonicalize(r);
}

Point lerp_on(const Point& p, const Point& q, double f) {
    const Chart qa = align_chart(p, q);
    Point r = p;
    const int dim = space_dim(p.space);
    for (int i = 0; i < dim; ++i) r.x[i] = p.x[i] + f * (qa[i] - p.x[i]);
    return canonicalize(r);
}

}  // namespace entroflow
