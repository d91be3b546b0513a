#ifndef ENTROFLOW_ENTROPY_HPP
#define ENTROFLOW_ENTROPY_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "entroflow/dynamics.hpp"

namespace entroflow {

/// Orbit segments f^k(p_i), k = 0..steps-1, for a fixed grid of points.
/// Computed once and shared read-only across all (n, eps) queries. Product
/// maps compose factor tables instead of materializing the product grid.
class OrbitTable {
  public:
    static OrbitTable build(const MapSpec& map, const std::vector<Point>& grid, int steps,
                            int threads = 1);
    /// Orbits of a product map on the cartesian grid left x right, in
    /// lexicographic order (left index major).
    static OrbitTable build_product(const MapSpec& map, const std::vector<Point>& left_grid,
                                    const std::vector<Point>& right_grid, int steps,
                                    int threads = 1);

    std::size_t size() const { return count_; }
    int steps() const { return steps_; }
    const Space& space() const { return space_; }

    /// Squared distance between f^k(p_i) and f^k(p_j).
    double step_dist2(std::size_t i, std::size_t j, int k) const;
    /// dn metric: max over 0 <= k < n of the step distance.
    double dn(std::size_t i, std::size_t j, int n) const;

    Chart coords(std::size_t i, int k) const;
    Point point(std::size_t i, int k) const;

  private:
    Space space_;
    int dim_ = 0;
    int steps_ = 0;
    std::size_t count_ = 0;
    std::vector<double> data_;
    std::shared_ptr<const OrbitTable> left_, right_;
    bool product_ = false;
};

/// Bowen dn metric on demand (orbits recomputed); the grid estimators use
/// OrbitTable instead.
double dn_metric(const MapSpec& map, const Point& p, const Point& q, int n);

/// Greedy maximal (n, eps)-separated subset in grid order: accept a point
/// iff its dn distance to every accepted point exceeds eps. Deterministic.
long separated_count(const OrbitTable& table, int n, double eps);

/// Quadratic-time reference implementation (same greedy order); test oracle.
long separated_count_brute(const OrbitTable& table, int n, double eps);

struct EpsFitRow {
    double eps = 0.0;
    std::vector<long> counts;       // per n, aligned with ns
    std::vector<int> window_ns;     // tail window used for the fit
    LineFit fit;
    bool usable = false;            // a window with >= 2 unsaturated points existed
    bool saturated = false;         // some counts were dropped as saturated
    bool fully_saturated = false;   // no unsaturated counts at all
};

struct EntropyEstimate {
    std::string map_id;
    std::size_t grid_size = 0;
    std::vector<int> ns;
    std::vector<double> eps_list;
    std::vector<EpsFitRow> rows;
    double headline = 0.0;
    double headline_eps = 0.0;
    double headline_residual = 0.0;
    bool headline_stable = false;  // residual below the configured threshold
};

/// Tail-window slope fits of log N(n, eps) vs n per eps. Counts at or beyond
/// half the grid size are treated as saturated and excluded; the headline is
/// the slope at the smallest eps with a stable fit. Throws when every eps is
/// fully saturated.
EntropyEstimate entropy_fit(const std::string& map_id, std::size_t grid_size,
                            const std::vector<int>& ns, const std::vector<double>& eps_list,
                            const std::vector<std::vector<long>>& counts,
                            double residual_threshold = 0.25);

struct EntropyOptions {
    double residual_threshold = 0.25;
    int threads = 1;
};

/// Orbit table + separated counts + fit in one call.
EntropyEstimate estimate_entropy(const MapSpec& map, const std::vector<Point>& grid,
                                 const std::vector<int>& ns, const std::vector<double>& eps_list,
                                 const EntropyOptions& opts = EntropyOptions{});

EntropyEstimate estimate_entropy(const OrbitTable& table, const std::string& map_id,
                                 const std::vector<int>& ns, const std::vector<double>& eps_list,
                                 const EntropyOptions& opts = EntropyOptions{});

// ---------------------------------------------------------------------------
// Tail entropy on explicit center plaques
// ---------------------------------------------------------------------------

using PlaqueSampler = std::function<std::vector<Point>(const Point& center)>;

/// Lattice on the 2-D center plaque (flow time x circle shift) of radius
/// `radius` with the given spacing; defined for flows on N x T^1.
PlaqueSampler center_plaque_sampler(const FlowSpec& spec, double radius, double spacing);

struct TailEntropyPoint {
    Point center;
    std::size_t plaque_samples = 0;
    std::size_t retained = 0;
    std::vector<int> ms;
    std::vector<long> counts;
    double slope_raw = 0.0;
    double slope = 0.0;  // clamped at zero
    double residual = 0.0;
};

struct TailEntropyResult {
    double r = 0.0;
    int n_ball = 0;
    int m_max = 0;
    double delta_gauge = 0.0;
    std::vector<TailEntropyPoint> per_center;
    double sup_slope = 0.0;
};

struct TailEntropyOptions {
    double sample_spacing = 0.0;  // default: delta_gauge / 2
    int threads = 1;
};

/// Finite-time proxy for the entropy of f restricted to the infinite
/// dynamical ball: sample the center plaque at x, retain points whose
/// forward and backward n_ball-step orbits stay r-close to the orbit of x,
/// then measure separated-set growth inside the retained set at gauge
/// delta_gauge for horizons up to m_max. Requires an invertible time-one map.
TailEntropyResult tail_entropy(const MapSpec& time_one_map, const std::vector<Point>& centers,
                               double r, int n_ball, int m_max, double delta_gauge,
                               const TailEntropyOptions& opts = TailEntropyOptions{},
                               const PlaqueSampler& sampler = nullptr);

// ---------------------------------------------------------------------------
// Product entropy
// ---------------------------------------------------------------------------

struct ProductEntropyCheck {
    EntropyEstimate product;
    EntropyEstimate left;
    EntropyEstimate right;
    double sum_of_factors = 0.0;
    double gap = 0.0;  // |product headline - sum of factor headlines|
};

/// Estimates h_top on the product grid and on each factor; reports both
/// sides of h(AxB) = h(A) + h(B).
ProductEntropyCheck product_entropy_check(const MapSpec& left, const MapSpec& right,
                                          const std::vector<Point>& left_grid,
                                          const std::vector<Point>& right_grid,
                                          const std::vector<int>& ns,
                                          const std::vector<double>& eps_list,
                                          const EntropyOptions& opts = EntropyOptions{});

}  // namespace entroflow

#endif
