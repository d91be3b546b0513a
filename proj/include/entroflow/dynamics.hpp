#ifndef ENTROFLOW_DYNAMICS_HPP
#define ENTROFLOW_DYNAMICS_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "entroflow/manifold.hpp"

namespace entroflow {

// ---------------------------------------------------------------------------
// Cat map
// ---------------------------------------------------------------------------

/// Leading eigenvalue of [[2,1],[1,1]] and its logarithm.
inline constexpr double kCatEigenvalue = 2.618033988749894848;
inline constexpr double kLogCatEigenvalue = 0.96242365011920689500;

Point cat_apply(const Point& p);       // Torus2 -> Torus2
Mat cat_derivative();                  // constant [[2,1],[1,1]]
Mat cat_power(long k);                 // A^k as a 2x2 double matrix, k may be negative

/// Unit eigenvectors of A in the base chart (unstable / stable).
Chart cat_unstable_direction();
Chart cat_stable_direction();

// ---------------------------------------------------------------------------
// Flow specifications
// ---------------------------------------------------------------------------

/// Circle profile a(s) = c0 + c1 cos(2 pi s); strictly positive requires
/// c0 > |c1| >= 0.
struct Profile {
    double c0 = 1.0;
    double c1 = 0.5;

    double value(double s) const;
    double derivative(double s) const;
    double max() const { return c0 + std::abs(c1); }
    double argmax() const { return c1 >= 0.0 ? 0.0 : 0.5; }
    double mean() const { return c0; }
    void validate() const;
};

struct HamiltonianParams {
    double eps1 = 0.05;
    double eps2 = 0.01;
    double delta = 0.1;
    double step = 1e-3;  // RK4 step for this flow
    void validate() const;
};

/// User-supplied vector field with numeric integration fallback.
struct NumericFieldDef {
    Space space;
    std::function<Chart(const Point&)> field;
    std::function<Mat(const Point&)> jacobian;  // optional; finite differences if absent
    double step = 1e-3;
};

enum class FlowKind : std::uint8_t {
    CatSuspension,              // suspension flow of A on N
    FamilyR,                    // Y^r(x,s) = (a(s) X(x), r) on N x T^1
    ProductSuspensionIdentity,  // alpha x id on N x T^1
    HamiltonianAnnulus,         // time change of H on [-delta,delta] x T^1
    NumericField,
};

struct FlowSpec {
    FlowKind kind = FlowKind::CatSuspension;
    bool reversed = false;
    double r = 0.0;
    Profile profile;
    HamiltonianParams ham;
    std::shared_ptr<const NumericFieldDef> numeric;

    static FlowSpec cat_suspension();
    static FlowSpec family_r(double r, Profile profile = Profile{});
    static FlowSpec product_suspension_identity();
    static FlowSpec hamiltonian_annulus(HamiltonianParams params = HamiltonianParams{});
    static FlowSpec numeric_field(NumericFieldDef def);
};

/// Reverses time; applying twice restores the original spec exactly.
FlowSpec time_reversed(FlowSpec spec);

Space flow_space(const FlowSpec& spec);
std::string flow_name(const FlowSpec& spec);

/// phi_t(p). Closed form for the builtin families, RK4 otherwise.
Point flow(const FlowSpec& spec, const Point& p, double t);

/// The generating vector field X(p) in chart coordinates.
TangentVector vector_field(const FlowSpec& spec, const Point& p);

struct FlowJet {
    Point point;
    Mat jacobian;  // D phi_t(p) in chart coordinates
};

/// phi_t(p) together with its derivative.
FlowJet flow_jet(const FlowSpec& spec, const Point& p, double t);

/// D phi_t(p) . v based at the image point.
TangentVector tangent_pushforward(const FlowSpec& spec, const Point& p, const TangentVector& v,
                                  double t);

// ---------------------------------------------------------------------------
// Runge-Kutta
// ---------------------------------------------------------------------------

/// Classical fixed-step RK4 on a space chart; a final partial step lands
/// exactly at t, the state is canonicalized after every step, and a
/// non-finite state raises std::runtime_error. Negative t integrates
/// backwards.
Point integrate_rk4(const Space& space, const std::function<Chart(const Point&)>& field,
                    Point p, double t, double h);

/// RK4 on raw chart coordinates (no quotient), for fields on R^dim.
Chart integrate_rk4_raw(int dim, const std::function<Chart(const Chart&)>& field, Chart x,
                        double t, double h);

// ---------------------------------------------------------------------------
// Hamiltonian on the annulus
// ---------------------------------------------------------------------------

/// Smooth bump: 1 on [0,1/2], exp(1 - 1/(1-q^2)) with q = 2u-1 on (1/2,1),
/// 0 for u >= 1, extended by 1 for u < 0.
double bump_rho(double u);
double bump_rho1(double u);
double bump_rho2(double u);

double hamiltonian_H(const HamiltonianParams& hp, double y, double z);
void hamiltonian_grad(const HamiltonianParams& hp, double y, double z, double& hy, double& hz);
void hamiltonian_hessian(const HamiltonianParams& hp, double y, double z, double& hyy,
                         double& hyz, double& hzz);
/// (ydot, zdot) = (dH/dz, -dH/dy)
Chart hamiltonian_field(const HamiltonianParams& hp, double y, double z);

enum class CriticalKind : std::uint8_t { Saddle, Center, Degenerate };

struct CriticalPoint {
    Point p;
    CriticalKind kind = CriticalKind::Degenerate;
    double hessian_det = 0.0;
    double grad_norm = 0.0;
};

/// Newton refinement of grid-scan seeds; nondegenerate points classified by
/// the Hessian determinant sign.
std::vector<CriticalPoint> hamiltonian_critical_points(const HamiltonianParams& hp);

/// g0: the time-one map of the Hamiltonian flow.
Point g0_apply(const HamiltonianParams& hp, const Point& p);

// ---------------------------------------------------------------------------
// Map specifications
// ---------------------------------------------------------------------------

enum class MapKind : std::uint8_t { CatMap, TimeOne, Product, DoublingCircle, Identity };

struct MapSpec {
    MapKind kind = MapKind::CatMap;
    bool inverted = false;                            // CatMap only: apply A^{-1}
    std::shared_ptr<const FlowSpec> flow;             // TimeOne
    std::shared_ptr<const MapSpec> left, right;       // Product
    Space space;                                      // derived; explicit for Identity

    static MapSpec cat_map();
    static MapSpec time_one(FlowSpec f);
    static MapSpec product(MapSpec torus_factor, MapSpec annulus_factor);
    static MapSpec doubling_circle();
    static MapSpec identity(Space s);
};

Space map_space(const MapSpec& m);
std::string map_name(const MapSpec& m);
Point map_apply(const MapSpec& m, const Point& p);
bool map_invertible(const MapSpec& m);
/// Throws std::invalid_argument for non-invertible maps (DoublingCircle).
MapSpec map_inverse(const MapSpec& m);

}  // namespace entroflow

#endif
