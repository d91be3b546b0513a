#include "entroflow/hyperbolicity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace entroflow {

LyapunovReport lyapunov_spectrum(const FlowSpec& spec, const Point& p, double horizon,
                                 double renorm_interval, const Mat* frame0) {
    if (!(renorm_interval > 0.0))
        throw std::invalid_argument("lyapunov_spectrum: renorm_interval must be positive");
    if (!(horizon >= 10.0 * renorm_interval))
        throw std::invalid_argument("lyapunov_spectrum: horizon must be >= 10 renorm intervals");

    const Space space = flow_space(spec);
    const int dim = space_dim(space);

    std::array<Chart, kMaxDim> frame;
    for (int j = 0; j < dim; ++j) {
        frame[j] = chart_zero();
        if (frame0) {
            for (int i = 0; i < dim; ++i) frame[j][i] = frame0->a[i][j];
        } else {
            frame[j][j] = 1.0;
        }
    }
    mgs_orthonormalize(frame, dim, dim);

    LyapunovReport rep;
    rep.base = canonicalize(p);
    rep.horizon = horizon;
    rep.renorm_interval = renorm_interval;

    std::array<double, kMaxDim> sums{};
    Point q = rep.base;
    double t = 0.0;
    const long nwin = long(std::llround(horizon / renorm_interval));
    for (long w = 0; w < nwin; ++w) {
        const double dt = std::min(renorm_interval, horizon - t);
        const FlowJet jet = flow_jet(spec, q, dt);
        for (int j = 0; j < dim; ++j) frame[j] = jet.jacobian.apply(frame[j]);
        const auto rdiag = mgs_orthonormalize(frame, dim, dim);
        double rmax = rdiag[0], rmin = rdiag[0];
        for (int j = 0; j < dim; ++j) {
            rmax = std::max(rmax, rdiag[j]);
            rmin = std::min(rmin, rdiag[j]);
        }
        if (!(rmin > 0.0) || rmax / rmin > 1e12)
            throw std::runtime_error(
                "lyapunov_spectrum: frame degenerated; use a smaller renorm interval");
        for (int j = 0; j < dim; ++j) sums[j] += std::log(rdiag[j]);
        q = jet.point;
        t += dt;

        rep.checkpoint_times.push_back(t);
        std::vector<double> est(dim);
        for (int j = 0; j < dim; ++j) est[j] = sums[j] / t;
        std::sort(est.begin(), est.end(), std::greater<double>());
        rep.running.push_back(std::move(est));
    }
    rep.exponents.assign(dim, 0.0);
    for (int j = 0; j < dim; ++j) rep.exponents[j] = sums[j] / t;
    std::sort(rep.exponents.begin(), rep.exponents.end(), std::greater<double>());
    return rep;
}

FlowDirectionReport flow_direction_exponent(const FlowSpec& spec, const Point& p, double horizon,
                                            int checkpoints) {
    const Space space = flow_space(spec);
    const int dim = space_dim(space);
    const TangentVector x0 = vector_field(spec, p);
    const double n0 = norm(x0.v, dim);
    if (!(n0 > 0.0))
        throw std::invalid_argument("flow_direction_exponent: field vanishes at the base point");

    FlowDirectionReport rep;
    Point q = canonicalize(p);
    Chart v = x0.v;
    double t = 0.0;
    const double dt = horizon / double(std::max(1, checkpoints));
    for (int c = 0; c < std::max(1, checkpoints); ++c) {
        const FlowJet jet = flow_jet(spec, q, dt);
        v = jet.jacobian.apply(v);
        q = jet.point;
        t += dt;
        const double nv = norm(v, dim);
        if (!(nv > 0.0))
            throw std::runtime_error("flow_direction_exponent: field vanished along the orbit");
        rep.times.push_back(t);
        rep.running.push_back(std::log(nv / n0) / t);
    }
    rep.exponent = rep.running.back();
    return rep;
}

namespace {

Chart generic_seed_vector(int dim) {
    // fixed, deliberately non-symmetric direction
    Chart v = {0.9501, 0.2311, 0.6068, 0.4860};
    for (int i = dim; i < kMaxDim; ++i) v[i] = 0.0;
    const double n = norm(v, dim);
    for (int i = 0; i < dim; ++i) v[i] /= n;
    return v;
}

}  // namespace

TangentVector unstable_vector(const FlowSpec& spec, const Point& p, double t_back) {
    const Space space = flow_space(spec);
    const int dim = space_dim(space);
    const Point q = flow(spec, p, -t_back);
    const FlowJet jet = flow_jet(spec, q, t_back);
    Chart v = jet.jacobian.apply(generic_seed_vector(dim));
    const double n = norm(v, dim);
    if (!(n > 0.0)) throw std::runtime_error("unstable_vector: pushforward collapsed");
    TangentVector out;
    out.base = jet.point;
    out.v = scale(v, 1.0 / n, dim);
    // fix a deterministic sign: first nonzero component positive
    for (int i = 0; i < dim; ++i) {
        if (std::abs(out.v[i]) > 1e-12) {
            if (out.v[i] < 0.0) out.v = scale(out.v, -1.0, dim);
            break;
        }
    }
    return out;
}

double unstable_alignment_residual(const FlowSpec& spec, const Point& p, double t_back) {
    const int dim = space_dim(flow_space(spec));
    const TangentVector a = unstable_vector(spec, p, t_back);
    const TangentVector b = unstable_vector(spec, p, 0.5 * t_back);
    return 1.0 - std::abs(dot(a.v, b.v, dim));
}

std::vector<Chart> bundle_basis(const FlowSpec& spec, const Point& p, Bundle b, double t_back) {
    const Space space = flow_space(spec);
    const int dim = space_dim(space);
    switch (b) {
        case Bundle::Unstable:
            return {unstable_vector(spec, p, t_back).v};
        case Bundle::Stable:
            return {unstable_vector(time_reversed(spec), p, t_back).v};
        case Bundle::Flow: {
            const TangentVector x = vector_field(spec, p);
            const double n = norm(x.v, dim);
            if (!(n > 0.0)) throw std::invalid_argument("bundle_basis: flow direction vanishes");
            return {scale(x.v, 1.0 / n, dim)};
        }
        case Bundle::Center: {
            const TangentVector x = vector_field(spec, p);
            const double n = norm(x.v, dim);
            if (!(n > 0.0)) throw std::invalid_argument("bundle_basis: flow direction vanishes");
            std::vector<Chart> basis = {scale(x.v, 1.0 / n, dim)};
            if (space.kind == SpaceKind::ProductNS) {
                // circle factor spans the second center direction
                Chart s = chart_zero();
                s[3] = 1.0;
                const double proj = dot(s, basis[0], dim);
                for (int i = 0; i < dim; ++i) s[i] -= proj * basis[0][i];
                const double ns = norm(s, dim);
                if (ns > 1e-9) basis.push_back(scale(s, 1.0 / ns, dim));
            }
            return basis;
        }
    }
    return {};
}

namespace {

// largest singular value of J restricted to span(basis), basis orthonormal
double restricted_norm(const Mat& j, const std::vector<Chart>& basis, int dim) {
    if (basis.size() == 1) return norm(j.apply(basis[0]), dim);
    // Gram matrix of the images, 2x2 case
    const Chart a = j.apply(basis[0]);
    const Chart b = j.apply(basis[1]);
    const double g00 = dot(a, a, dim), g01 = dot(a, b, dim), g11 = dot(b, b, dim);
    const double tr = g00 + g11;
    const double disc = std::sqrt(std::max(0.0, (g00 - g11) * (g00 - g11) + 4.0 * g01 * g01));
    return std::sqrt(std::max(0.0, 0.5 * (tr + disc)));
}

}  // namespace

DominationReport domination_check(const FlowSpec& spec, const std::vector<Point>& points,
                                  int t_max, Bundle e_bundle, Bundle f_bundle, double t_back,
                                  double margin) {
    if (points.empty()) throw std::invalid_argument("domination_check: no sample points");
    const Space space = flow_space(spec);
    const int dim = space_dim(space);
    const FlowSpec rev = time_reversed(spec);

    DominationReport rep;
    rep.margin = margin;
    for (int t = 1; t <= t_max; ++t) {
        double sup = -1e300;
        for (const Point& x : points) {
            const auto e_basis = bundle_basis(spec, x, e_bundle, t_back);
            const FlowJet fwd = flow_jet(spec, x, double(t));
            const double ne = restricted_norm(fwd.jacobian, e_basis, dim);
            const auto f_basis = bundle_basis(spec, fwd.point, f_bundle, t_back);
            const FlowJet bwd = flow_jet(rev, fwd.point, double(t));
            const double nf = restricted_norm(bwd.jacobian, f_basis, dim);
            const double ratio = std::log(ne) + std::log(nf);
            sup = std::max(sup, ratio);
        }
        rep.times.push_back(double(t));
        rep.sup_log_ratio.push_back(sup);
    }
    const LineFit fit = fit_line(rep.times, rep.sup_log_ratio);
    rep.fitted_rate = fit.slope;
    rep.rms_residual = fit.rms_residual;
    rep.dominated = fit.slope < -margin;
    return rep;
}

}  // namespace entroflow
