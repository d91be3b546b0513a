#ifndef ENTROFLOW_HYPERBOLICITY_HPP
#define ENTROFLOW_HYPERBOLICITY_HPP

#include <vector>

#include "entroflow/dynamics.hpp"

namespace entroflow {

struct LyapunovReport {
    Point base;
    double horizon = 0.0;
    double renorm_interval = 1.0;
    std::vector<double> exponents;             // per unit time, sorted descending
    std::vector<double> checkpoint_times;      // one entry per renormalization
    std::vector<std::vector<double>> running;  // running estimates at each checkpoint
};

/// Evolves an orthonormal frame with the derivative cocycle, re-orthonormalizing
/// every `renorm_interval` time units and accumulating log diagonal entries.
/// `frame0` optionally replaces the identity starting frame. Throws if the
/// frame degenerates between renormalizations (advice: shrink the interval).
LyapunovReport lyapunov_spectrum(const FlowSpec& spec, const Point& p, double horizon,
                                 double renorm_interval, const Mat* frame0 = nullptr);

struct FlowDirectionReport {
    double exponent = 0.0;
    std::vector<double> times;
    std::vector<double> running;
};

/// (1/T) log ||D phi_T X(p)|| / ||X(p)||; zero for fixed-point-free flows.
/// Throws if the field vanishes at p or along the sampled orbit.
FlowDirectionReport flow_direction_exponent(const FlowSpec& spec, const Point& p, double horizon,
                                            int checkpoints = 16);

/// Push a generic vector from phi_{-T_back}(p) forward to p and normalize;
/// aligns with the unstable direction at p.
TangentVector unstable_vector(const FlowSpec& spec, const Point& p, double t_back);

/// Alignment diagnostic: 1 - |<v(T_back), v(T_back/2)>|. Small values mean
/// the power iteration has converged.
double unstable_alignment_residual(const FlowSpec& spec, const Point& p, double t_back);

enum class Bundle : std::uint8_t { Unstable, Stable, Center, Flow };

/// Basis (1 or 2 chart vectors) for the requested bundle at p. Unstable and
/// Stable are estimated by pushforward over t_back; Flow is the normalized
/// generator; Center spans the flow direction plus, on N x T^1 products, the
/// circle factor.
std::vector<Chart> bundle_basis(const FlowSpec& spec, const Point& p, Bundle b, double t_back);

struct DominationReport {
    std::vector<double> times;
    std::vector<double> sup_log_ratio;  // sup over sample points of log ratio
    double fitted_rate = 0.0;
    double rms_residual = 0.0;
    double margin = 0.1;
    bool dominated = false;
};

/// Checks the domination inequality along sample orbits: the ratio
/// ||D phi_t|_E|| * ||D phi_{-t}(phi_t x)|_F|| should decay exponentially
/// when F dominates E. Verdict: fitted rate of the log-ratio below -margin.
DominationReport domination_check(const FlowSpec& spec, const std::vector<Point>& points,
                                  int t_max, Bundle e_bundle, Bundle f_bundle,
                                  double t_back = 30.0, double margin = 0.1);

}  // namespace entroflow

#endif
