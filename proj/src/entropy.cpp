#include "entroflow/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "entroflow/parallel.hpp"

namespace entroflow {

namespace {

inline double circ_gap(double a, double b) {
    double d = std::abs(a - b);
    d -= std::floor(d);
    return d > 0.5 ? 1.0 - d : d;
}

inline double sq(double x) { return x * x; }

// squared suspension distance on raw chart coords (three roof candidates)
inline double susp_dist2(const double* p, const double* q) {
    double best = sq(circ_gap(p[0], q[0])) + sq(circ_gap(p[1], q[1])) + sq(p[2] - q[2]);
    {
        const double b1 = 2.0 * q[0] + q[1], b2 = q[0] + q[1];
        const double c = sq(circ_gap(p[0], b1)) + sq(circ_gap(p[1], b2)) + sq(p[2] - q[2] + 1.0);
        if (c < best) best = c;
    }
    {
        const double b1 = q[0] - q[1], b2 = -q[0] + 2.0 * q[1];
        const double c = sq(circ_gap(p[0], b1)) + sq(circ_gap(p[1], b2)) + sq(p[2] - q[2] - 1.0);
        if (c < best) best = c;
    }
    return best;
}

double chart_dist2(const Space& space, const double* p, const double* q) {
    switch (space.kind) {
        case SpaceKind::Torus2:
            return sq(circ_gap(p[0], q[0])) + sq(circ_gap(p[1], q[1]));
        case SpaceKind::Circle:
            return sq(circ_gap(p[0], q[0]));
        case SpaceKind::Suspension:
            return susp_dist2(p, q);
        case SpaceKind::ProductNS:
            return susp_dist2(p, q) + sq(circ_gap(p[3], q[3]));
        case SpaceKind::Annulus:
            return sq(p[0] - q[0]) + sq(circ_gap(p[1], q[1]));
        case SpaceKind::ProductTA:
            return sq(circ_gap(p[0], q[0])) + sq(circ_gap(p[1], q[1])) + sq(p[2] - q[2]) +
                   sq(circ_gap(p[3], q[3]));
    }
    return 0.0;
}

}  // namespace

OrbitTable OrbitTable::build(const MapSpec& map, const std::vector<Point>& grid, int steps,
                             int threads) {
    if (grid.empty()) throw std::invalid_argument("OrbitTable: empty grid");
    if (steps < 1) throw std::invalid_argument("OrbitTable: steps must be >= 1");
    OrbitTable t;
    t.space_ = map_space(map);
    t.dim_ = space_dim(t.space_);
    t.steps_ = steps;
    t.count_ = grid.size();
    t.data_.assign(t.count_ * std::size_t(steps) * std::size_t(t.dim_), 0.0);
    parallel_for(t.count_, threads, [&](std::size_t i) {
        Point p = canonicalize(grid[i]);
        for (int k = 0; k < steps; ++k) {
            double* dst = t.data_.data() + (i * std::size_t(steps) + std::size_t(k)) * t.dim_;
            for (int d = 0; d < t.dim_; ++d) dst[d] = p.x[d];
            if (k + 1 < steps) p = map_apply(map, p);
        }
    });
    return t;
}

OrbitTable OrbitTable::build_product(const MapSpec& map, const std::vector<Point>& left_grid,
                                     const std::vector<Point>& right_grid, int steps,
                                     int threads) {
    if (map.kind != MapKind::Product)
        throw std::invalid_argument("build_product: expects a product map");
    OrbitTable t;
    t.space_ = map_space(map);
    t.dim_ = space_dim(t.space_);
    t.steps_ = steps;
    t.product_ = true;
    t.left_ = std::make_shared<OrbitTable>(build(*map.left, left_grid, steps, threads));
    t.right_ = std::make_shared<OrbitTable>(build(*map.right, right_grid, steps, threads));
    t.count_ = t.left_->size() * t.right_->size();
    return t;
}

double OrbitTable::step_dist2(std::size_t i, std::size_t j, int k) const {
    if (product_) {
        const std::size_t rc = right_->size();
        return left_->step_dist2(i / rc, j / rc, k) + right_->step_dist2(i % rc, j % rc, k);
    }
    const double* p = data_.data() + (i * std::size_t(steps_) + std::size_t(k)) * dim_;
    const double* q = data_.data() + (j * std::size_t(steps_) + std::size_t(k)) * dim_;
    return chart_dist2(space_, p, q);
}

double OrbitTable::dn(std::size_t i, std::size_t j, int n) const {
    double best = 0.0;
    for (int k = 0; k < n; ++k) best = std::max(best, step_dist2(i, j, k));
    return std::sqrt(best);
}

Chart OrbitTable::coords(std::size_t i, int k) const {
    if (product_) {
        const std::size_t rc = right_->size();
        const Chart l = left_->coords(i / rc, k);
        const Chart r = right_->coords(i % rc, k);
        return {l[0], l[1], r[0], r[1]};
    }
    Chart c = chart_zero();
    const double* p = data_.data() + (i * std::size_t(steps_) + std::size_t(k)) * dim_;
    for (int d = 0; d < dim_; ++d) c[d] = p[d];
    return c;
}

Point OrbitTable::point(std::size_t i, int k) const {
    Point p;
    p.space = space_;
    p.x = coords(i, k);
    return p;
}

double dn_metric(const MapSpec& map, const Point& p, const Point& q, int n) {
    if (n < 1) throw std::invalid_argument("dn_metric: n must be >= 1");
    Point a = canonicalize(p), b = canonicalize(q);
    double best = 0.0;
    for (int k = 0; k < n; ++k) {
        best = std::max(best, dist(a, b));
        if (k + 1 < n) {
            a = map_apply(map, a);
            b = map_apply(map, b);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Greedy separated sets with a step-0 spatial hash
// ---------------------------------------------------------------------------

namespace {

// Ties at exactly eps resolve as "not separated"; the relative guard keeps
// lattice-commensurate distances from flipping on rounding.
inline bool within_eps2(double d2, double eps2) { return d2 <= eps2 * (1.0 + 1e-9); }

class HashGrid {
  public:
    HashGrid(const Space& space, double eps, std::size_t expected)
        : space_(space), axes_(space_axes(space)) {
        dims_ = int(axes_.size());
        if (dims_ < 1 || dims_ > kMaxDim) throw std::logic_error("HashGrid: bad dimension");
        total_ = 1;
        for (int a = 0; a < dims_; ++a) {
            const double range = axes_[a].hi - axes_[a].lo;
            int m = int(std::floor(range / eps));
            if (m < 1) m = 1;
            cells_[a] = m;
            scale_[a] = double(m) / range;
            total_ *= std::size_t(m);
        }
        heads_.assign(total_, -1);
        next_.reserve(expected);
        susp_ = space.kind == SpaceKind::Suspension || space.kind == SpaceKind::ProductNS;
    }

    void insert(std::size_t idx, const Chart& c) {
        const std::size_t key = key_of(c);
        items_.push_back(long(idx));
        next_.push_back(heads_[key]);
        heads_[key] = long(items_.size()) - 1;
    }

    // All accepted indices whose step-0 point could be within eps of c.
    void candidates(const Chart& c, std::vector<long>& out) const {
        out.clear();
        keys_.clear();
        gather_keys(c);
        if (susp_) {
            const double cell_tau = 1.0 / scale_[2];
            const double tau = c[2] - axes_[2].lo;
            if (tau >= (axes_[2].hi - axes_[2].lo) - cell_tau || tau <= cell_tau) {
                Chart up = c;  // representative across the roof, crossing up
                up[0] = wrap01(2.0 * c[0] + c[1]);
                up[1] = wrap01(c[0] + c[1]);
                up[2] = 0.0;
                gather_keys(up);
                Chart dn = c;  // crossing down
                dn[0] = wrap01(c[0] - c[1]);
                dn[1] = wrap01(-c[0] + 2.0 * c[1]);
                dn[2] = axes_[2].hi - 0.5 / scale_[2];
                gather_keys(dn);
            }
        }
        std::sort(keys_.begin(), keys_.end());
        keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
        for (const std::size_t key : keys_) {
            for (long slot = heads_[key]; slot >= 0; slot = next_[std::size_t(slot)])
                out.push_back(items_[std::size_t(slot)]);
        }
    }

  private:
    void gather_keys(const Chart& c) const {
        int base[kMaxDim] = {0, 0, 0, 0};
        for (int a = 0; a < dims_; ++a) {
            int cell = int(std::floor((c[a] - axes_[a].lo) * scale_[a]));
            if (cell < 0) cell = 0;
            if (cell >= cells_[a]) cell = cells_[a] - 1;
            base[a] = cell;
        }
        int offs[kMaxDim];
        enumerate(0, base, offs);
    }

    void enumerate(int axis, const int* base, int* offs) const {
        if (axis >= dims_ || axis >= kMaxDim) {
            std::size_t key = 0;
            for (int a = 0; a < dims_; ++a) key = key * std::size_t(cells_[a]) + std::size_t(offs[a]);
            keys_.push_back(key);
            return;
        }
        const int m = cells_[axis];
        int seen[3] = {-1, -1, -1};
        int nseen = 0;
        for (int d = -1; d <= 1; ++d) {
            int cell = base[axis] + d;
            if (axes_[axis].periodic) {
                cell = (cell % m + m) % m;
            } else {
                if (cell < 0 || cell >= m) continue;
            }
            bool dup = false;
            for (int s = 0; s < nseen; ++s) dup = dup || seen[s] == cell;
            if (dup) continue;
            seen[nseen++] = cell;
            offs[axis] = cell;
            enumerate(axis + 1, base, offs);
        }
    }

    std::size_t key_of(const Chart& c) const {
        std::size_t key = 0;
        for (int a = 0; a < dims_; ++a) {
            int cell = int(std::floor((c[a] - axes_[a].lo) * scale_[a]));
            if (cell < 0) cell = 0;
            if (cell >= cells_[a]) cell = cells_[a] - 1;
            key = key * std::size_t(cells_[a]) + std::size_t(cell);
        }
        return key;
    }

    Space space_;
    std::vector<AxisInfo> axes_;
    int dims_ = 0;
    int cells_[kMaxDim] = {1, 1, 1, 1};
    double scale_[kMaxDim] = {1, 1, 1, 1};
    std::size_t total_ = 1;
    bool susp_ = false;
    std::vector<long> heads_;
    std::vector<long> next_;
    std::vector<long> items_;
    mutable std::vector<std::size_t> keys_;
};

}  // namespace

long separated_count(const OrbitTable& table, int n, double eps) {
    if (n < 1 || n > table.steps())
        throw std::invalid_argument("separated_count: n out of the table's range");
    if (!(eps > 0.0)) throw std::invalid_argument("separated_count: eps must be positive");
    const double eps2 = eps * eps;
    HashGrid hash(table.space(), eps, table.size() / 4 + 16);
    std::vector<long> cand;
    long accepted = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const Chart c0 = table.coords(i, 0);
        hash.candidates(c0, cand);
        bool rejected = false;
        for (const long j : cand) {
            bool close_all = true;
            for (int k = n - 1; k >= 0; --k) {  // late steps separate first
                if (!within_eps2(table.step_dist2(i, std::size_t(j), k), eps2)) {
                    close_all = false;
                    break;
                }
            }
            if (close_all) {
                rejected = true;
                break;
            }
        }
        if (!rejected) {
            hash.insert(i, c0);
            ++accepted;
        }
    }
    return accepted;
}

long separated_count_brute(const OrbitTable& table, int n, double eps) {
    if (n < 1 || n > table.steps())
        throw std::invalid_argument("separated_count_brute: n out of range");
    const double eps2 = eps * eps;
    std::vector<std::size_t> accepted;
    for (std::size_t i = 0; i < table.size(); ++i) {
        bool rejected = false;
        for (const std::size_t j : accepted) {
            bool close_all = true;
            for (int k = n - 1; k >= 0; --k) {
                if (!within_eps2(table.step_dist2(i, j, k), eps2)) {
                    close_all = false;
                    break;
                }
            }
            if (close_all) {
                rejected = true;
                break;
            }
        }
        if (!rejected) accepted.push_back(i);
    }
    return long(accepted.size());
}

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

EntropyEstimate entropy_fit(const std::string& map_id, std::size_t grid_size,
                            const std::vector<int>& ns, const std::vector<double>& eps_list,
                            const std::vector<std::vector<long>>& counts,
                            double residual_threshold) {
    if (ns.size() < 4) throw std::invalid_argument("entropy_fit: need >= 4 values of n per eps");
    if (counts.size() != eps_list.size())
        throw std::invalid_argument("entropy_fit: one count row per eps required");
    for (std::size_t e = 0; e < counts.size(); ++e)
        if (counts[e].size() != ns.size())
            throw std::invalid_argument("entropy_fit: count row length mismatch");
    if (!std::is_sorted(ns.begin(), ns.end()))
        throw std::invalid_argument("entropy_fit: ns must be ascending");

    EntropyEstimate est;
    est.map_id = map_id;
    est.grid_size = grid_size;
    est.ns = ns;
    est.eps_list = eps_list;

    const double sat_level = 0.5 * double(grid_size);
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
        EpsFitRow row;
        row.eps = eps_list[e];
        row.counts = counts[e];
        // truncate at the first saturated n
        std::size_t usable = 0;
        while (usable < row.counts.size() && double(row.counts[usable]) <= sat_level) ++usable;
        row.saturated = usable < row.counts.size();
        row.fully_saturated = usable == 0;
        if (usable >= 2) {
            const std::size_t lo = usable / 2;  // tail window: upper half
            std::vector<double> xs, ys;
            for (std::size_t k = lo; k < usable; ++k) {
                if (row.counts[k] < 1)
                    throw std::runtime_error("entropy_fit: nonpositive separated count");
                xs.push_back(double(ns[k]));
                ys.push_back(std::log(double(row.counts[k])));
                row.window_ns.push_back(ns[k]);
            }
            if (xs.size() >= 2) {
                row.fit = fit_line(xs, ys);
                row.usable = true;
            }
        }
        est.rows.push_back(std::move(row));
    }

    bool all_saturated = true;
    for (const auto& row : est.rows) all_saturated = all_saturated && row.fully_saturated;
    if (all_saturated)
        throw std::runtime_error("entropy_fit: every eps saturated the grid; use a finer grid");

    // headline: smallest eps with a stable fit, else smallest usable
    const EpsFitRow* pick = nullptr;
    for (const auto& row : est.rows) {
        if (!row.usable) continue;
        const bool stable = row.fit.rms_residual < residual_threshold;
        if (pick == nullptr) {
            pick = &row;
        } else {
            const bool pick_stable = pick->fit.rms_residual < residual_threshold;
            if ((stable && !pick_stable) || (stable == pick_stable && row.eps < pick->eps))
                pick = &row;
        }
    }
    if (pick == nullptr)
        throw std::runtime_error("entropy_fit: no eps produced a usable fit window");
    est.headline = pick->fit.slope;
    est.headline_eps = pick->eps;
    est.headline_residual = pick->fit.rms_residual;
    est.headline_stable = pick->fit.rms_residual < residual_threshold;
    return est;
}

EntropyEstimate estimate_entropy(const OrbitTable& table, const std::string& map_id,
                                 const std::vector<int>& ns, const std::vector<double>& eps_list,
                                 const EntropyOptions& opts) {
    std::vector<std::vector<long>> counts(eps_list.size(), std::vector<long>(ns.size(), 0));
    const std::size_t cells = eps_list.size() * ns.size();
    parallel_for(cells, opts.threads, [&](std::size_t c) {
        const std::size_t e = c / ns.size();
        const std::size_t k = c % ns.size();
        counts[e][k] = separated_count(table, ns[k], eps_list[e]);
    });
    return entropy_fit(map_id, table.size(), ns, eps_list, counts, opts.residual_threshold);
}

EntropyEstimate estimate_entropy(const MapSpec& map, const std::vector<Point>& grid,
                                 const std::vector<int>& ns, const std::vector<double>& eps_list,
                                 const EntropyOptions& opts) {
    if (ns.empty()) throw std::invalid_argument("estimate_entropy: ns must be nonempty");
    const OrbitTable table = OrbitTable::build(map, grid, ns.back(), opts.threads);
    return estimate_entropy(table, map_name(map), ns, eps_list, opts);
}

// ---------------------------------------------------------------------------
// Tail entropy
// ---------------------------------------------------------------------------

PlaqueSampler center_plaque_sampler(const FlowSpec& spec, double radius, double spacing) {
    const Space space = flow_space(spec);
    if (space.kind != SpaceKind::ProductNS)
        throw std::invalid_argument("center_plaque_sampler: defined on N x T^1 flows");
    if (!(radius > 0.0) || !(spacing > 0.0) || spacing > radius)
        throw std::invalid_argument("center_plaque_sampler: bad radius/spacing");
    return [spec, radius, spacing](const Point& center) {
        const int half = int(std::floor(radius / spacing));
        std::vector<Point> out;
        out.reserve(std::size_t(2 * half + 1) * std::size_t(2 * half + 1));
        for (int iu = -half; iu <= half; ++iu) {
            // move along the flow, which traces the alpha-orbit factor of the
            // center leaf
            const Point on_orbit = flow(spec, center, double(iu) * spacing);
            for (int iw = -half; iw <= half; ++iw) {
                Point q = on_orbit;
                q.x[3] = wrap01(q.x[3] + double(iw) * spacing);
                out.push_back(q);
            }
        }
        return out;
    };
}

TailEntropyResult tail_entropy(const MapSpec& time_one_map, const std::vector<Point>& centers,
                               double r, int n_ball, int m_max, double delta_gauge,
                               const TailEntropyOptions& opts, const PlaqueSampler& sampler) {
    if (time_one_map.kind != MapKind::TimeOne)
        throw std::invalid_argument("tail_entropy: expects the time-one map of a flow");
    if (centers.empty()) throw std::invalid_argument("tail_entropy: centers must be nonempty");
    if (!(r > 0.0) || n_ball < 0 || m_max < 1)
        throw std::invalid_argument("tail_entropy: bad parameters");
    if (!(delta_gauge > 0.0) || delta_gauge > r)
        throw std::invalid_argument("tail_entropy: gauge must lie in (0, r]");

    const double spacing = opts.sample_spacing > 0.0 ? opts.sample_spacing : 0.5 * delta_gauge;
    const PlaqueSampler sample =
        sampler ? sampler : center_plaque_sampler(*time_one_map.flow, 17.0 * r, spacing);
    const MapSpec inverse = map_inverse(time_one_map);

    TailEntropyResult res;
    res.r = r;
    res.n_ball = n_ball;
    res.m_max = m_max;
    res.delta_gauge = delta_gauge;
    res.per_center.resize(centers.size());

    parallel_for(centers.size(), opts.threads, [&](std::size_t ci) {
        const Point x = canonicalize(centers[ci]);
        TailEntropyPoint tp;
        tp.center = x;
        const std::vector<Point> samples = sample(x);
        tp.plaque_samples = samples.size();

        // retain samples whose two-sided n_ball orbit stays r-close to the
        // orbit of x
        std::vector<Point> retained;
        {
            std::vector<Point> fwd_x(std::size_t(n_ball) + 1), bwd_x(std::size_t(n_ball) + 1);
            fwd_x[0] = bwd_x[0] = x;
            for (int k = 1; k <= n_ball; ++k) {
                fwd_x[std::size_t(k)] = map_apply(time_one_map, fwd_x[std::size_t(k - 1)]);
                bwd_x[std::size_t(k)] = map_apply(inverse, bwd_x[std::size_t(k - 1)]);
            }
            for (const Point& q : samples) {
                bool keep = dist(q, x) <= r;
                Point fq = q, bq = q;
                for (int k = 1; keep && k <= n_ball; ++k) {
                    fq = map_apply(time_one_map, fq);
                    if (dist(fq, fwd_x[std::size_t(k)]) > r) keep = false;
                    if (!keep) break;
                    bq = map_apply(inverse, bq);
                    if (dist(bq, bwd_x[std::size_t(k)]) > r) keep = false;
                }
                if (keep) retained.push_back(q);
            }
        }
        if (retained.empty())
            throw std::runtime_error(
                "tail_entropy: empty retained set; radius too small for the sampling density");
        tp.retained = retained.size();

        const OrbitTable table = OrbitTable::build(time_one_map, retained, m_max, 1);
        std::vector<double> xs, ys;
        for (int m = 1; m <= m_max; ++m) {
            const long c = separated_count(table, m, delta_gauge);
            tp.ms.push_back(m);
            tp.counts.push_back(c);
        }
        const std::size_t lo = tp.ms.size() / 2;  // tail window: upper half
        for (std::size_t k = lo; k < tp.ms.size(); ++k) {
            xs.push_back(double(tp.ms[k]));
            ys.push_back(std::log(double(std::max(1L, tp.counts[k]))));
        }
        const LineFit fit = fit_line(xs, ys);
        tp.slope_raw = fit.slope;
        tp.slope = std::max(0.0, fit.slope);
        tp.residual = fit.rms_residual;
        res.per_center[ci] = std::move(tp);
    });

    res.sup_slope = 0.0;
    for (const auto& tp : res.per_center) res.sup_slope = std::max(res.sup_slope, tp.slope);
    return res;
}

// ---------------------------------------------------------------------------
// Product entropy
// ---------------------------------------------------------------------------

ProductEntropyCheck product_entropy_check(const MapSpec& left, const MapSpec& right,
                                          const std::vector<Point>& left_grid,
                                          const std::vector<Point>& right_grid,
                                          const std::vector<int>& ns,
                                          const std::vector<double>& eps_list,
                                          const EntropyOptions& opts) {
    if (ns.empty()) throw std::invalid_argument("product_entropy_check: ns must be nonempty");
    const MapSpec prod = MapSpec::product(left, right);
    const OrbitTable table =
        OrbitTable::build_product(prod, left_grid, right_grid, ns.back(), opts.threads);
    ProductEntropyCheck check;
    check.product = estimate_entropy(table, map_name(prod), ns, eps_list, opts);
    check.left = estimate_entropy(left, left_grid, ns, eps_list, opts);
    check.right = estimate_entropy(right, right_grid, ns, eps_list, opts);
    check.sum_of_factors = check.left.headline + check.right.headline;
    check.gap = std::abs(check.product.headline - check.sum_of_factors);
    return check;
}

}  // namespace entroflow
