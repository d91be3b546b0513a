#include "entroflow/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace entroflow {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.28318530717958647692;

double sinc(double x) {
    if (std::abs(x) < 1e-6) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Cat map
// ---------------------------------------------------------------------------

Point cat_apply(const Point& p) {
    if (p.space.kind != SpaceKind::Torus2)
        throw std::invalid_argument("cat_apply: expects a Torus2 point");
    Point r = canonicalize(p);
    cat_base_apply(r.x[0], r.x[1]);
    return r;
}

Mat cat_derivative() {
    Mat m = Mat::zero(2);
    m.a[0][0] = 2.0; m.a[0][1] = 1.0;
    m.a[1][0] = 1.0; m.a[1][1] = 1.0;
    return m;
}

Mat cat_power(long k) {
    const bool inv = k < 0;
    unsigned long n = inv ? (unsigned long)(-k) : (unsigned long)k;
    Mat base = Mat::zero(2);
    if (inv) {
        base.a[0][0] = 1.0; base.a[0][1] = -1.0;
        base.a[1][0] = -1.0; base.a[1][1] = 2.0;
    } else {
        base = cat_derivative();
    }
    Mat result = Mat::identity(2);
    while (n > 0) {
        if (n & 1) result = base.mul(result);
        base = base.mul(base);
        n >>= 1;
    }
    return result;
}

Chart cat_unstable_direction() {
    // eigenvector (1, lambda - 2), normalized
    const double c = kCatEigenvalue - 2.0;
    const double n = std::sqrt(1.0 + c * c);
    return {1.0 / n, c / n, 0.0, 0.0};
}

Chart cat_stable_direction() {
    const double c = (3.0 - std::sqrt(5.0)) / 2.0 - 2.0;
    const double n = std::sqrt(1.0 + c * c);
    return {1.0 / n, c / n, 0.0, 0.0};
}

// ---------------------------------------------------------------------------
// Profile
// ---------------------------------------------------------------------------

double Profile::value(double s) const { return c0 + c1 * std::cos(kTwoPi * s); }
double Profile::derivative(double s) const { return -kTwoPi * c1 * std::sin(kTwoPi * s); }

void Profile::validate() const {
    if (!(c0 > std::abs(c1)) || !(std::abs(c1) >= 0.0) || !std::isfinite(c0) || !std::isfinite(c1))
        throw std::invalid_argument("profile requires c0 > |c1| >= 0");
}

void HamiltonianParams::validate() const {
    if (!(eps1 > 0.0) || !(eps2 > 0.0)) throw std::invalid_argument("eps1, eps2 must be positive");
    if (!(delta > 0.0) || !(4.0 * delta < 0.5))
        throw std::invalid_argument("delta must satisfy 0 < 4*delta < 1/2");
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
}

// ---------------------------------------------------------------------------
// FlowSpec
// ---------------------------------------------------------------------------

FlowSpec FlowSpec::cat_suspension() {
    FlowSpec f;
    f.kind = FlowKind::CatSuspension;
    return f;
}

FlowSpec FlowSpec::family_r(double r, Profile profile) {
    if (!(std::abs(r) < 1.0)) throw std::invalid_argument("family_r requires r in (-1, 1)");
    profile.validate();
    FlowSpec f;
    f.kind = FlowKind::FamilyR;
    f.r = r;
    f.profile = profile;
    return f;
}

FlowSpec FlowSpec::product_suspension_identity() {
    FlowSpec f;
    f.kind = FlowKind::ProductSuspensionIdentity;
    return f;
}

FlowSpec FlowSpec::hamiltonian_annulus(HamiltonianParams params) {
    params.validate();
    FlowSpec f;
    f.kind = FlowKind::HamiltonianAnnulus;
    f.ham = params;
    return f;
}

FlowSpec FlowSpec::numeric_field(NumericFieldDef def) {
    if (!def.field) throw std::invalid_argument("numeric_field requires a field evaluator");
    if (!(def.step > 0.0)) throw std::invalid_argument("numeric_field requires step > 0");
    FlowSpec f;
    f.kind = FlowKind::NumericField;
    f.numeric = std::make_shared<NumericFieldDef>(std::move(def));
    return f;
}

FlowSpec time_reversed(FlowSpec spec) {
    spec.reversed = !spec.reversed;
    return spec;
}

Space flow_space(const FlowSpec& spec) {
    switch (spec.kind) {
        case FlowKind::CatSuspension: return Space::suspension();
        case FlowKind::FamilyR:
        case FlowKind::ProductSuspensionIdentity: return Space::product_ns();
        case FlowKind::HamiltonianAnnulus: return Space::annulus(spec.ham.delta);
        case FlowKind::NumericField: return spec.numeric->space;
    }
    return Space::torus2();
}

std::string flow_name(const FlowSpec& spec) {
    std::string base;
    switch (spec.kind) {
        case FlowKind::CatSuspension: base = "cat_suspension"; break;
        case FlowKind::FamilyR: base = "family_r(" + std::to_string(spec.r) + ")"; break;
        case FlowKind::ProductSuspensionIdentity: base = "product_suspension_identity"; break;
        case FlowKind::HamiltonianAnnulus: base = "hamiltonian_annulus"; break;
        case FlowKind::NumericField: base = "numeric_field"; break;
    }
    return spec.reversed ? "time_reversed(" + base + ")" : base;
}

// ---------------------------------------------------------------------------
// Bump and Hamiltonian
// ---------------------------------------------------------------------------

double bump_rho(double u) {
    if (u <= 0.5) return 1.0;
    if (u >= 1.0) return 0.0;
    const double q = 2.0 * u - 1.0;
    const double w = 1.0 - q * q;
    return std::exp(1.0 - 1.0 / w);
}

double bump_rho1(double u) {
    if (u <= 0.5 || u >= 1.0) return 0.0;
    const double q = 2.0 * u - 1.0;
    const double w = 1.0 - q * q;
    return -4.0 * q * std::exp(1.0 - 1.0 / w) / (w * w);
}

double bump_rho2(double u) {
    if (u <= 0.5 || u >= 1.0) return 0.0;
    const double q = 2.0 * u - 1.0;
    const double w = 1.0 - q * q;
    const double w2 = w * w;
    return std::exp(1.0 - 1.0 / w) * (-8.0 / w2 + 16.0 * q * q / (w2 * w2) - 32.0 * q * q / (w2 * w));
}

namespace {

// Tilt cutoff: 1 for |y| <= 0.9 delta, 0 for |y| >= 0.95 delta. Applied to
// the eps2 * y term so the field vanishes identically on a boundary
// neighborhood while the flow stays Hamiltonian.
constexpr double kCutSlope = 10.0;
constexpr double kCutStart = 0.9;

double cut_arg(double y, double delta) {
    return kCutSlope * (std::abs(y) / delta - kCutStart) + 0.5;
}
double tilt_cut(double y, double delta) { return bump_rho(cut_arg(y, delta)); }
double tilt_cut1(double y, double delta) {
    const double sgn = y >= 0.0 ? 1.0 : -1.0;
    return bump_rho1(cut_arg(y, delta)) * kCutSlope * sgn / delta;
}
double tilt_cut2(double y, double delta) {
    const double f = kCutSlope / delta;
    return bump_rho2(cut_arg(y, delta)) * f * f;
}

// bump radius: support d < delta/2, so the pendulum cell sits well inside
// the annulus
double bump_scale(const HamiltonianParams& hp) { return 0.5 * hp.delta; }

// drift speed for |y| >= delta/2, where the radial bump is inactive
double drift_speed(const HamiltonianParams& hp, double y) {
    return -hp.eps2 * (tilt_cut(y, hp.delta) + y * tilt_cut1(y, hp.delta));
}
double drift_speed1(const HamiltonianParams& hp, double y) {
    return -hp.eps2 * (2.0 * tilt_cut1(y, hp.delta) + y * tilt_cut2(y, hp.delta));
}

}  // namespace

double hamiltonian_H(const HamiltonianParams& hp, double y, double z) {
    const double s1 = bump_scale(hp);
    const double c = circle_offset(0.0, z);
    const double d = std::hypot(y, c);
    return hp.eps1 * bump_rho(d / s1) + hp.eps2 * y * tilt_cut(y, hp.delta);
}

void hamiltonian_grad(const HamiltonianParams& hp, double y, double z, double& hy, double& hz) {
    const double s1 = bump_scale(hp);
    const double c = circle_offset(0.0, z);
    const double d = std::hypot(y, c);
    double radial = 0.0;
    if (d > 0.0) radial = bump_rho1(d / s1) / (s1 * d);
    hy = hp.eps1 * radial * y + hp.eps2 * (tilt_cut(y, hp.delta) + y * tilt_cut1(y, hp.delta));
    hz = hp.eps1 * radial * c;
}

void hamiltonian_hessian(const HamiltonianParams& hp, double y, double z, double& hyy,
                         double& hyz, double& hzz) {
    const double s1 = bump_scale(hp);
    const double c = circle_offset(0.0, z);
    const double d = std::hypot(y, c);
    double r1 = 0.0, r2 = 0.0;
    if (d > 0.0) {
        const double u = d / s1;
        r1 = bump_rho1(u);
        r2 = bump_rho2(u);
    }
    const double d2 = d * d, d3 = d2 * d;
    const double s2 = s1 * s1;
    if (d > 0.0) {
        hyy = hp.eps1 * (r2 * y * y / (s2 * d2) + r1 * c * c / (s1 * d3));
        hzz = hp.eps1 * (r2 * c * c / (s2 * d2) + r1 * y * y / (s1 * d3));
        hyz = hp.eps1 * (r2 * y * c / (s2 * d2) - r1 * y * c / (s1 * d3));
    } else {
        hyy = hzz = hyz = 0.0;
    }
    hyy += hp.eps2 * (2.0 * tilt_cut1(y, hp.delta) + y * tilt_cut2(y, hp.delta));
}

Chart hamiltonian_field(const HamiltonianParams& hp, double y, double z) {
    double hy, hz;
    hamiltonian_grad(hp, y, z, hy, hz);
    return {hz, -hy, 0.0, 0.0};
}

// ---------------------------------------------------------------------------
// RK4 integrators
// ---------------------------------------------------------------------------

namespace {

void check_chart_finite(const Chart& x, int dim) {
    for (int i = 0; i < dim; ++i)
        if (!std::isfinite(x[i])) throw std::runtime_error("integrator produced non-finite state");
}

template <typename FieldFn>
Chart rk4_step_chart(int dim, const FieldFn& f, const Chart& x, double h) {
    const Chart k1 = f(x);
    const Chart k2 = f(axpy(0.5 * h, k1, x, dim));
    const Chart k3 = f(axpy(0.5 * h, k2, x, dim));
    const Chart k4 = f(axpy(h, k3, x, dim));
    Chart r = x;
    for (int i = 0; i < dim; ++i)
        r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return r;
}

}  // namespace

Chart integrate_rk4_raw(int dim, const std::function<Chart(const Chart&)>& field, Chart x,
                        double t, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("integrate_rk4: step must be positive");
    const double sign = t < 0.0 ? -1.0 : 1.0;
    const double total = std::abs(t);
    const long nfull = long(std::floor(total / h));
    for (long i = 0; i < nfull; ++i) {
        x = rk4_step_chart(dim, field, x, sign * h);
        check_chart_finite(x, dim);
    }
    const double rem = total - double(nfull) * h;
    if (rem > 0.0) {
        x = rk4_step_chart(dim, field, x, sign * rem);
        check_chart_finite(x, dim);
    }
    return x;
}

Point integrate_rk4(const Space& space, const std::function<Chart(const Point&)>& field,
                    Point p, double t, double h) {
    const int dim = space_dim(space);
    auto chart_field = [&](const Chart& x) {
        Point q;
        q.space = space;
        q.x = x;
        return field(canonicalize(q));
    };
    if (!(h > 0.0)) throw std::invalid_argument("integrate_rk4: step must be positive");
    p = canonicalize(p);
    const double sign = t < 0.0 ? -1.0 : 1.0;
    const double total = std::abs(t);
    const long nfull = long(std::floor(total / h));
    for (long i = 0; i < nfull; ++i) {
        p.x = rk4_step_chart(dim, chart_field, p.x, sign * h);
        p = canonicalize(p);  // throws on non-finite or domain escape
    }
    const double rem = total - double(nfull) * h;
    if (rem > 0.0) {
        p.x = rk4_step_chart(dim, chart_field, p.x, sign * rem);
        p = canonicalize(p);
    }
    return p;
}

namespace {

// Joint RK4 on (point, first variation). The chart transition of
// canonicalization (cat-map block on roof crossings) is folded into J.
struct VariationalState {
    Chart x;
    Mat j;
};

template <typename FieldFn, typename JacFn>
VariationalState rk4_variational_step(int dim, const FieldFn& f, const JacFn& df,
                                      const VariationalState& s, double h) {
    auto eval = [&](const Chart& x, const Mat& j, Chart& kx, Mat& kj) {
        kx = f(x);
        kj = df(x).mul(j);
    };
    Chart k1x, k2x, k3x, k4x;
    Mat k1j, k2j, k3j, k4j;
    eval(s.x, s.j, k1x, k1j);

    auto advance = [&](const Chart& kx, const Mat& kj, double a) {
        VariationalState t;
        t.x = axpy(a, kx, s.x, dim);
        t.j = s.j;
        for (int i = 0; i < dim; ++i)
            for (int jj = 0; jj < dim; ++jj) t.j.a[i][jj] += a * kj.a[i][jj];
        return t;
    };
    VariationalState t2 = advance(k1x, k1j, 0.5 * h);
    eval(t2.x, t2.j, k2x, k2j);
    VariationalState t3 = advance(k2x, k2j, 0.5 * h);
    eval(t3.x, t3.j, k3x, k3j);
    VariationalState t4 = advance(k3x, k3j, h);
    eval(t4.x, t4.j, k4x, k4j);

    VariationalState r = s;
    for (int i = 0; i < dim; ++i)
        r.x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
    for (int i = 0; i < dim; ++i)
        for (int jj = 0; jj < dim; ++jj)
            r.j.a[i][jj] += h / 6.0 * (k1j.a[i][jj] + 2.0 * k2j.a[i][jj] + 2.0 * k3j.a[i][jj] +
                                       k4j.a[i][jj]);
    return r;
}

template <typename FieldFn, typename JacFn>
FlowJet integrate_variational(const Space& space, const FieldFn& f, const JacFn& df, Point p,
                              double t, double h) {
    const int dim = space_dim(space);
    VariationalState s;
    s.x = canonicalize(p).x;
    s.j = Mat::identity(dim);
    const double sign = t < 0.0 ? -1.0 : 1.0;
    const double total = std::abs(t);
    const long nfull = long(std::floor(total / h));
    auto do_step = [&](double step) {
        s = rk4_variational_step(dim, f, df, s, step);
        Point q;
        q.space = space;
        q.x = s.x;
        q = canonicalize_tracked(q, &s.j);
        s.x = q.x;
    };
    for (long i = 0; i < nfull; ++i) do_step(sign * h);
    const double rem = total - double(nfull) * h;
    if (rem > 0.0) do_step(sign * rem);
    FlowJet jet;
    jet.point.space = space;
    jet.point.x = s.x;
    jet.point = canonicalize(jet.point);
    jet.jacobian = s.j;
    return jet;
}

}  // namespace

// ---------------------------------------------------------------------------
// Flow evaluation
// ---------------------------------------------------------------------------

namespace {

// time change of the r-family: T(s,t) = int_0^t a(s + u r) du, in the form
// t*c0 + c1*t*cos(2 pi s + pi t r)*sinc(pi t r), exact for every r including 0
double family_time_change(const Profile& a, double r, double s, double t) {
    const double x = kPi * t * r;
    return t * a.c0 + a.c1 * t * std::cos(kTwoPi * s + x) * sinc(x);
}

double family_time_change_ds(const Profile& a, double r, double s, double t) {
    const double x = kPi * t * r;
    return -kTwoPi * a.c1 * t * std::sin(kTwoPi * s + x) * sinc(x);
}

Point flow_inner(const FlowSpec& spec, const Point& p, double t, Mat* jac);

Point hamiltonian_flow(const HamiltonianParams& hp, const Point& p, double t, Mat* jac) {
    const Space space = Space::annulus(hp.delta);
    const double s1 = bump_scale(hp);
    const Point q = canonicalize(p);
    if (std::abs(q.x[0]) >= s1) {
        // radial bump inactive and y frozen: exact drift in z
        Point r = q;
        const double v = drift_speed(hp, q.x[0]);
        r.x[1] = wrap01(q.x[1] + v * t);
        if (jac) {
            *jac = Mat::identity(2);
            jac->a[1][0] = drift_speed1(hp, q.x[0]) * t;
        }
        return r;
    }
    auto f = [&](const Chart& x) { return hamiltonian_field(hp, x[0], x[1]); };
    if (!jac) {
        auto fp = [&](const Point& pt) { return hamiltonian_field(hp, pt.x[0], pt.x[1]); };
        return integrate_rk4(space, fp, q, t, hp.step);
    }
    auto df = [&](const Chart& x) {
        double hyy, hyz, hzz;
        hamiltonian_hessian(hp, x[0], x[1], hyy, hyz, hzz);
        Mat m = Mat::zero(2);
        m.a[0][0] = hyz;  m.a[0][1] = hzz;
        m.a[1][0] = -hyy; m.a[1][1] = -hyz;
        return m;
    };
    FlowJet jet = integrate_variational(space, f, df, q, t, hp.step);
    *jac = jet.jacobian;
    return jet.point;
}

Point numeric_flow(const NumericFieldDef& def, const Point& p, double t, Mat* jac) {
    const int dim = space_dim(def.space);
    auto f = [&](const Chart& x) {
        Point q;
        q.space = def.space;
        q.x = x;
        return def.field(canonicalize(q));
    };
    if (!jac) return integrate_rk4(def.space, def.field, p, t, def.step);
    auto df = [&](const Chart& x) {
        Point q;
        q.space = def.space;
        q.x = x;
        q = canonicalize(q);
        if (def.jacobian) return def.jacobian(q);
        // central differences of the field
        const double h = 1e-6;
        Mat m = Mat::zero(dim);
        for (int j = 0; j < dim; ++j) {
            Chart dp = chart_zero();
            dp[j] = h;
            const Chart fp = def.field(chart_translate(q, dp));
            dp[j] = -h;
            const Chart fm = def.field(chart_translate(q, dp));
            for (int i = 0; i < dim; ++i) m.a[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
        return m;
    };
    FlowJet jet = integrate_variational(def.space, f, df, p, t, def.step);
    *jac = jet.jacobian;
    return jet.point;
}

Point flow_inner(const FlowSpec& spec, const Point& p, double t, Mat* jac) {
    const Space space = flow_space(spec);
    if (!same_space(p.space, space))
        throw std::invalid_argument("flow: point not in the domain of " + flow_name(spec));
    if (spec.reversed) {
        FlowSpec fwd = spec;
        fwd.reversed = false;
        return flow_inner(fwd, p, -t, jac);
    }
    switch (spec.kind) {
        case FlowKind::CatSuspension: {
            Point r = canonicalize(p);
            r.x[2] += t;
            if (jac) {
                *jac = Mat::identity(3);
                return canonicalize_tracked(r, jac);
            }
            return canonicalize(r);
        }
        case FlowKind::ProductSuspensionIdentity: {
            Point r = canonicalize(p);
            r.x[2] += t;
            if (jac) {
                *jac = Mat::identity(4);
                return canonicalize_tracked(r, jac);
            }
            return canonicalize(r);
        }
        case FlowKind::FamilyR: {
            Point r = canonicalize(p);
            const double s = r.x[3];
            const double T = family_time_change(spec.profile, spec.r, s, t);
            r.x[2] += T;
            r.x[3] = s + t * spec.r;
            if (jac) {
                *jac = Mat::identity(4);
                jac->a[2][3] = family_time_change_ds(spec.profile, spec.r, s, t);
                return canonicalize_tracked(r, jac);
            }
            return canonicalize(r);
        }
        case FlowKind::HamiltonianAnnulus:
            return hamiltonian_flow(spec.ham, p, t, jac);
        case FlowKind::NumericField:
            return numeric_flow(*spec.numeric, p, t, jac);
    }
    throw std::logic_error("flow: unknown kind");
}

}  // namespace

Point flow(const FlowSpec& spec, const Point& p, double t) {
    return flow_inner(spec, p, t, nullptr);
}

FlowJet flow_jet(const FlowSpec& spec, const Point& p, double t) {
    FlowJet jet;
    Mat j = Mat::identity(space_dim(flow_space(spec)));
    jet.point = flow_inner(spec, p, t, &j);
    jet.jacobian = j;
    return jet;
}

TangentVector vector_field(const FlowSpec& spec, const Point& p) {
    const Space space = flow_space(spec);
    if (!same_space(p.space, space))
        throw std::invalid_argument("vector_field: point not in the domain");
    TangentVector v;
    v.base = canonicalize(p);
    if (spec.reversed) {
        FlowSpec fwd = spec;
        fwd.reversed = false;
        TangentVector inner = vector_field(fwd, p);
        v.v = scale(inner.v, -1.0, space_dim(space));
        return v;
    }
    switch (spec.kind) {
        case FlowKind::CatSuspension:
            v.v = {0.0, 0.0, 1.0, 0.0};
            break;
        case FlowKind::ProductSuspensionIdentity:
            v.v = {0.0, 0.0, 1.0, 0.0};
            break;
        case FlowKind::FamilyR:
            v.v = {0.0, 0.0, spec.profile.value(v.base.x[3]), spec.r};
            break;
        case FlowKind::HamiltonianAnnulus:
            v.v = hamiltonian_field(spec.ham, v.base.x[0], v.base.x[1]);
            break;
        case FlowKind::NumericField:
            v.v = spec.numeric->field(v.base);
            break;
    }
    return v;
}

TangentVector tangent_pushforward(const FlowSpec& spec, const Point& p, const TangentVector& v,
                                  double t) {
    if (!same_space(v.base.space, p.space))
        throw std::invalid_argument("tangent_pushforward: vector not based at p");
    const FlowJet jet = flow_jet(spec, p, t);
    TangentVector out;
    out.base = jet.point;
    out.v = jet.jacobian.apply(v.v);
    return out;
}

// ---------------------------------------------------------------------------
// Hamiltonian critical points and g0
// ---------------------------------------------------------------------------

namespace {

struct NewtonResult {
    bool converged = false;
    double y = 0.0, z = 0.0;
    double grad_norm = 0.0;
};

NewtonResult newton_on_gradient(const HamiltonianParams& hp, double y, double z) {
    NewtonResult res;
    const double ylim = 0.999 * hp.delta;
    double mu = 0.0;
    for (int it = 0; it < 120; ++it) {
        double hy, hz;
        hamiltonian_grad(hp, y, z, hy, hz);
        const double g2 = hy * hy + hz * hz;
        if (g2 < 1e-26) break;
        double hyy, hyz, hzz;
        hamiltonian_hessian(hp, y, z, hyy, hyz, hzz);
        const double a = hyy + mu, b = hyz, c = hyz, d = hzz + mu;
        const double det = a * d - b * c;
        double sy, sz;
        if (std::abs(det) < 1e-14) {
            mu = std::max(mu * 10.0, 1e-6);
            continue;
        }
        sy = -(d * hy - b * hz) / det;
        sz = -(-c * hy + a * hz) / det;
        // backtracking on |grad|^2
        double alpha = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 24; ++bt, alpha *= 0.5) {
            const double ny = std::clamp(y + alpha * sy, -ylim, ylim);
            const double nz = z + alpha * sz;
            double gy, gz;
            hamiltonian_grad(hp, ny, nz, gy, gz);
            if (gy * gy + gz * gz < g2) {
                y = ny;
                z = nz;
                moved = true;
                break;
            }
        }
        if (!moved) {
            mu = std::max(mu * 10.0, 1e-6);
            if (mu > 1e4) break;
        } else if (mu > 0.0) {
            mu *= 0.1;
            if (mu < 1e-12) mu = 0.0;
        }
    }
    double hy, hz;
    hamiltonian_grad(hp, y, z, hy, hz);
    res.grad_norm = std::hypot(hy, hz);
    res.converged = res.grad_norm < 1e-10;
    res.y = y;
    res.z = wrap01(z);
    return res;
}

}  // namespace

std::vector<CriticalPoint> hamiltonian_critical_points(const HamiltonianParams& hp) {
    hp.validate();
    const double ymax = 0.96 * hp.delta;

    std::vector<CriticalPoint> found;
    auto add_point = [&](double y, double z, double grad_norm) {
        Point p = Point::annulus(y, wrap01(z), hp.delta);
        double hyy, hyz, hzz;
        hamiltonian_hessian(hp, y, z, hyy, hyz, hzz);
        const double det = hyy * hzz - hyz * hyz;
        CriticalKind kind = CriticalKind::Degenerate;
        if (std::abs(det) >= 1e-2) kind = det > 0.0 ? CriticalKind::Center : CriticalKind::Saddle;
        for (const auto& cp : found) {
            if (kind == CriticalKind::Degenerate && cp.kind == CriticalKind::Degenerate) {
                // degenerate points come in circles and boundary strips of
                // constant y; keep one representative per strip
                if (std::abs(cp.p.x[0] - y) < 2e-3) return;
            } else if (kind == cp.kind && dist(cp.p, p) < 1e-5) {
                return;
            }
        }
        CriticalPoint cp;
        cp.p = p;
        cp.grad_norm = grad_norm;
        cp.hessian_det = det;
        cp.kind = kind;
        found.push_back(cp);
    };
    auto try_seed = [&](double y, double z) {
        const NewtonResult nr = newton_on_gradient(hp, y, z);
        if (nr.converged) add_point(nr.y, nr.z, nr.grad_norm);
    };

    // Stage 1: H is even in z, so interior critical points lie on the
    // symmetry axes; bracket sign changes of dH/dy there and bisect, then
    // polish with Newton.
    for (double z : {0.0, 0.5}) {
        const int nfine = 4801;
        double prev_y = -ymax, prev_hy, hz_unused;
        hamiltonian_grad(hp, prev_y, z, prev_hy, hz_unused);
        for (int i = 1; i < nfine; ++i) {
            const double y = -ymax + 2.0 * ymax * double(i) / double(nfine - 1);
            double hy;
            hamiltonian_grad(hp, y, z, hy, hz_unused);
            if ((prev_hy < 0.0 && hy > 0.0) || (prev_hy > 0.0 && hy < 0.0)) {
                double lo = prev_y, hi = y, flo = prev_hy;
                for (int it = 0; it < 100; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    double fm;
                    hamiltonian_grad(hp, mid, z, fm, hz_unused);
                    if ((flo < 0.0) == (fm < 0.0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                try_seed(0.5 * (lo + hi), z);
            }
            prev_y = y;
            prev_hy = hy;
        }
    }

    // Stage 2: generic 2-D scan for local minima of |grad H|^2 (catches
    // degenerate circles and anything off-axis).
    const int ny = 193, nz = 240;
    std::vector<double> g2(std::size_t(ny) * nz);
    auto at = [&](int iy, int iz) -> double& {
        return g2[std::size_t(iy) * nz + std::size_t((iz % nz + nz) % nz)];
    };
    for (int iy = 0; iy < ny; ++iy) {
        const double y = -ymax + 2.0 * ymax * double(iy) / double(ny - 1);
        for (int iz = 0; iz < nz; ++iz) {
            const double z = double(iz) / double(nz);
            double hy, hz;
            hamiltonian_grad(hp, y, z, hy, hz);
            at(iy, iz) = hy * hy + hz * hz;
        }
    }
    for (int iy = 0; iy < ny; ++iy) {
        for (int iz = 0; iz < nz; ++iz) {
            const double v = at(iy, iz);
            bool is_min = true;
            for (int dy = -1; dy <= 1 && is_min; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    if (dy == 0 && dz == 0) continue;
                    const int jy = iy + dy;
                    if (jy < 0 || jy >= ny) continue;
                    if (at(jy, iz + dz) < v) {
                        is_min = false;
                        break;
                    }
                }
            if (!is_min) continue;
            const double y = -ymax + 2.0 * ymax * double(iy) / double(ny - 1);
            const double z = double(iz) / double(nz);
            try_seed(y, z);
        }
    }

    std::sort(found.begin(), found.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        if (a.kind != b.kind) return int(a.kind) < int(b.kind);
        if (a.p.x[0] != b.p.x[0]) return a.p.x[0] < b.p.x[0];
        return a.p.x[1] < b.p.x[1];
    });
    return found;
}

Point g0_apply(const HamiltonianParams& hp, const Point& p) {
    return hamiltonian_flow(hp, p, 1.0, nullptr);
}

// ---------------------------------------------------------------------------
// MapSpec
// ---------------------------------------------------------------------------

MapSpec MapSpec::cat_map() {
    MapSpec m;
    m.kind = MapKind::CatMap;
    m.space = Space::torus2();
    return m;
}

MapSpec MapSpec::time_one(FlowSpec f) {
    MapSpec m;
    m.kind = MapKind::TimeOne;
    m.flow = std::make_shared<FlowSpec>(std::move(f));
    m.space = flow_space(*m.flow);
    return m;
}

MapSpec MapSpec::product(MapSpec torus_factor, MapSpec annulus_factor) {
    if (map_space(torus_factor).kind != SpaceKind::Torus2 ||
        map_space(annulus_factor).kind != SpaceKind::Annulus)
        throw std::invalid_argument("product: expects a Torus2 factor and an Annulus factor");
    MapSpec m;
    m.kind = MapKind::Product;
    m.space = Space::product_ta(map_space(annulus_factor).delta);
    m.left = std::make_shared<MapSpec>(std::move(torus_factor));
    m.right = std::make_shared<MapSpec>(std::move(annulus_factor));
    return m;
}

MapSpec MapSpec::doubling_circle() {
    MapSpec m;
    m.kind = MapKind::DoublingCircle;
    m.space = Space::circle();
    return m;
}

MapSpec MapSpec::identity(Space s) {
    MapSpec m;
    m.kind = MapKind::Identity;
    m.space = s;
    return m;
}

Space map_space(const MapSpec& m) { return m.space; }

std::string map_name(const MapSpec& m) {
    switch (m.kind) {
        case MapKind::CatMap: return m.inverted ? "cat_map_inverse" : "cat_map";
        case MapKind::TimeOne: return "time_one(" + flow_name(*m.flow) + ")";
        case MapKind::Product:
            return "product(" + map_name(*m.left) + ", " + map_name(*m.right) + ")";
        case MapKind::DoublingCircle: return "doubling_circle";
        case MapKind::Identity: return "identity(" + space_name(m.space) + ")";
    }
    return "?";
}

Point map_apply(const MapSpec& m, const Point& p) {
    if (!same_space(p.space, m.space))
        throw std::invalid_argument("map_apply: point not in the map's domain");
    switch (m.kind) {
        case MapKind::CatMap: {
            Point r = canonicalize(p);
            if (m.inverted) cat_base_apply_inv(r.x[0], r.x[1]);
            else cat_base_apply(r.x[0], r.x[1]);
            return r;
        }
        case MapKind::TimeOne:
            return flow(*m.flow, p, 1.0);
        case MapKind::Product: {
            const Point q = canonicalize(p);
            Point lp;
            lp.space = Space::torus2();
            lp.x = {q.x[0], q.x[1], 0.0, 0.0};
            Point rp;
            rp.space = Space::annulus(m.space.delta);
            rp.x = {q.x[2], q.x[3], 0.0, 0.0};
            const Point li = map_apply(*m.left, lp);
            const Point ri = map_apply(*m.right, rp);
            Point out = q;
            out.x = {li.x[0], li.x[1], ri.x[0], ri.x[1]};
            return out;
        }
        case MapKind::DoublingCircle: {
            Point r = canonicalize(p);
            r.x[0] = wrap01(2.0 * r.x[0]);
            return r;
        }
        case MapKind::Identity:
            return canonicalize(p);
    }
    throw std::logic_error("map_apply: unknown kind");
}

bool map_invertible(const MapSpec& m) {
    switch (m.kind) {
        case MapKind::DoublingCircle: return false;
        case MapKind::Product: return map_invertible(*m.left) && map_invertible(*m.right);
        default: return true;
    }
}

MapSpec map_inverse(const MapSpec& m) {
    switch (m.kind) {
        case MapKind::CatMap: {
            MapSpec inv = m;
            inv.inverted = !m.inverted;
            return inv;
        }
        case MapKind::TimeOne: {
            MapSpec inv = m;
            inv.flow = std::make_shared<FlowSpec>(time_reversed(*m.flow));
            return inv;
        }
        case MapKind::Product:
            return MapSpec::product(map_inverse(*m.left), map_inverse(*m.right));
        case MapKind::DoublingCircle:
            throw std::invalid_argument("map_inverse: doubling map is not invertible");
        case MapKind::Identity:
            return m;
    }
    throw std::logic_error("map_inverse: unknown kind");
}

}  // namespace entroflow
