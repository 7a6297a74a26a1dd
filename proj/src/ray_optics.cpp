#include "superwave/ray_optics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <unordered_map>

#include <Eigen/SparseLU>

#include "superwave/errors.hpp"

namespace superwave {

LayerChannels layer_channel_matrix(const StackSpec& spec) {
    spec.validate();
    LayerChannels lc;
    lc.channels = radiative_orders(spec);
    const double g0 = lc.channels.front().gamma_m;
    for (std::size_t i = 1; i < lc.channels.size(); ++i) lc.gamma1_diff += lc.channels[i].gamma_m;
    lc.gamma_total = g0 + lc.gamma1_diff;
    lc.r1 = -g0 / lc.gamma_total;
    lc.r_d = -1.0 - lc.r1;

    const auto n = static_cast<Eigen::Index>(lc.channels.size());
    lc.rho.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            lc.rho(i, j) = -std::sqrt(lc.channels[static_cast<std::size_t>(i)].gamma_m *
                                      lc.channels[static_cast<std::size_t>(j)].gamma_m) /
                           lc.gamma_total;

    // Both sides of the sheet: v has one entry per (channel, side).
    Eigen::VectorXd v(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = std::sqrt(0.5 * lc.channels[static_cast<std::size_t>(i)].gamma_m);
        v(n + i) = v(i);
    }
    const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n, 2 * n) - (2.0 / lc.gamma_total) * v * v.transpose();
    lc.unitarity_deviation =
        (s * s.transpose() - Eigen::MatrixXd::Identity(2 * n, 2 * n)).cwiseAbs().maxCoeff();
    if (lc.unitarity_deviation > 1e-10)
        throw Error("single-layer channel matrix is not unitary");
    return lc;
}

namespace {

// The lossless limit of a singular bounce problem: the layers are given a
// small absorption eta, f(eta) = f(0) + c eta + O(eta^2), and two evaluations
// are extrapolated to eta = 0.
template <class F>
cplx lossless_limit(F&& f) {
    const double eta = 1e-7;
    return 2.0 * f(eta) - f(2.0 * eta);
}

}  // namespace

InfiniteStackResult infinite_stack_reflectivity(const StackSpec& spec) {
    spec.validate();
    if (spec.n_z != 2) throw ValidationError("infinite_stack_reflectivity needs two layers");
    const LayerChannels lc = layer_channel_matrix(spec);
    const auto n = static_cast<Eigen::Index>(lc.channels.size());
    const Vec2 b1{spec.shifts[1].x - spec.shifts[0].x, spec.shifts[1].y - spec.shifts[0].y};

    Eigen::VectorXcd phi(n);
    Eigen::MatrixXcd rho_b(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& oi = lc.channels[static_cast<std::size_t>(i)];
        phi(i) = std::exp(kI * oi.kz() * spec.a_z);
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& oj = lc.channels[static_cast<std::size_t>(j)];
            rho_b(i, j) = lc.rho(i, j) * std::exp(kI * (dot(oj.q, b1) - dot(oi.q, b1)));
        }
    }
    const Eigen::MatrixXcd rho = lc.rho.cast<cplx>();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(n);
    e0(0) = 1.0;

    // G: amplitudes arriving back at layer A after one trip through B.
    auto solve = [&](double eta, bool& singular) {
        const Eigen::MatrixXcd ra = (1.0 - eta) * rho;
        const Eigen::MatrixXcd rb = (1.0 - eta) * rho_b;
        const Eigen::MatrixXcd k = phi.asDiagonal() * rb * phi.asDiagonal();
        const Eigen::FullPivLU<Eigen::MatrixXcd> lu(id - k * ra);
        singular = lu.rcond() < 1e-12;
        const Eigen::VectorXcd g = lu.solve(k * (id + ra) * e0);
        return cplx{(ra * (e0 + g))(0) + g(0)};
    };
    InfiniteStackResult res;
    bool singular = false;
    res.r = solve(0.0, singular);
    if (singular || !std::isfinite(std::abs(res.r))) {
        res.degenerate = true;
        bool ignored = false;
        res.r = lossless_limit([&](double eta) { return solve(eta, ignored); });
    }
    return res;
}

double expected_ray_count(const StackSpec& spec) {
    const auto shells = radiative_shells(spec);
    if (shells.empty()) return 1.0;
    const auto& o = shells.front().front();
    const double hop = spec.a_z * o.q_ratio / o.kz_ratio;
    const double ratio = spec.linear_size() / hop;
    return ratio * ratio;
}

namespace {

struct Hop {
    Vec2 d;           // transverse displacement
    cplx phase_ab;    // B -> A leg, including propagation
    cplx phase_ba;    // A -> B leg, including propagation
    cplx amplitude;   // per-direction scattering amplitude
    long ci = 0;      // lattice coordinates of d when a basis exists
    long cj = 0;
};

struct HopSet {
    std::vector<Hop> hops;  // hops[0] is the specular channel
    bool has_basis = false;
    Vec2 d1, d2;
};

HopSet make_hops(const StackSpec& spec, const RayOptions& options) {
    const LayerChannels lc = layer_channel_matrix(spec);
    const Vec2 b1{spec.shifts[1].x - spec.shifts[0].x, spec.shifts[1].y - spec.shifts[0].y};
    HopSet hs;
    const int nd = lc.diffraction_count();
    for (const auto& o : lc.channels) {
        Hop h;
        const cplx prop = std::exp(kI * o.kz() * spec.a_z);
        if (o.is_zero()) {
            h.amplitude = lc.r1;
        } else {
            const double q = std::hypot(o.q.x, o.q.y);
            const double hop = spec.a_z * o.q_ratio / o.kz_ratio;
            h.d = {hop * o.q.x / q, hop * o.q.y / q};
            h.amplitude = options.splitting == Splitting::equal ? cplx{lc.r_d / nd}
                                                                : cplx{-o.gamma_m / lc.gamma_total};
        }
        const double qb = dot(o.q, b1);
        if (options.shift_phase == ShiftPhase::per_bounce) {
            h.phase_ba = prop * std::exp(kI * qb);
            h.phase_ab = prop * std::exp(-kI * qb);
        } else {
            h.phase_ba = prop;
            h.phase_ab = o.is_zero() ? prop : prop * std::exp(kI * qb);
        }
        hs.hops.push_back(h);
    }
    if (hs.hops.size() < 2) return hs;

    // Integer basis for the displacements when one exists.
    hs.d1 = hs.hops[1].d;
    bool found = false;
    for (std::size_t i = 2; i < hs.hops.size(); ++i) {
        const Vec2 d = hs.hops[i].d;
        const double cross = hs.d1.x * d.y - hs.d1.y * d.x;
        if (std::abs(cross) > 1e-9 * (hs.d1.x * hs.d1.x + hs.d1.y * hs.d1.y)) {
            hs.d2 = d;
            found = true;
            break;
        }
    }
    if (!found) return hs;
    const double det = hs.d1.x * hs.d2.y - hs.d1.y * hs.d2.x;
    hs.has_basis = true;
    for (auto& h : hs.hops) {
        const double ci = (h.d.x * hs.d2.y - h.d.y * hs.d2.x) / det;
        const double cj = (hs.d1.x * h.d.y - hs.d1.y * h.d.x) / det;
        if (std::abs(ci - std::round(ci)) > 1e-9 || std::abs(cj - std::round(cj)) > 1e-9) {
            hs.has_basis = false;
            break;
        }
        h.ci = std::lround(ci);
        h.cj = std::lround(cj);
    }
    return hs;
}

struct KeyHash {
    std::size_t operator()(const std::pair<long, long>& k) const {
        return std::hash<long>()(k.first) * 1000003u ^ std::hash<long>()(k.second);
    }
};

struct Layout {
    std::vector<Vec2> points;
    // target[h][i]: index reached from point i by hop h, or -1 when clipped.
    std::vector<std::vector<int>> target;
    int start = 0;
};

bool inside(Vec2 p, double half) {
    const double tol = 1e-9 * (1.0 + half);
    return std::abs(p.x) <= half + tol && std::abs(p.y) <= half + tol;
}

// Clipped grid grown from `origin`; an empty layout when the origin itself
// lies outside the box.
Layout clipped_layout(const HopSet& hs, Vec2 origin, double box, int max_points) {
    Layout lay;
    const double half = 0.5 * box;
    if (!inside(origin, half)) return lay;
    const double quantum = 1e-7;
    std::unordered_map<std::pair<long, long>, int, KeyHash> index;
    std::vector<std::pair<long, long>> coords;  // lattice coordinates (basis mode)
    auto key_of = [&](Vec2 p, long ci, long cj) {
        return hs.has_basis ? std::make_pair(ci, cj)
                            : std::make_pair(std::lround(p.x / quantum), std::lround(p.y / quantum));
    };
    auto position = [&](long ci, long cj) {
        return Vec2{origin.x + ci * hs.d1.x + cj * hs.d2.x, origin.y + ci * hs.d1.y + cj * hs.d2.y};
    };
    std::deque<int> queue;
    lay.points.push_back(origin);
    coords.emplace_back(0, 0);
    index.emplace(key_of(origin, 0, 0), 0);
    queue.push_back(0);
    while (!queue.empty()) {
        const int i = queue.front();
        queue.pop_front();
        for (std::size_t h = 1; h < hs.hops.size(); ++h) {
            const long ci = coords[static_cast<std::size_t>(i)].first + hs.hops[h].ci;
            const long cj = coords[static_cast<std::size_t>(i)].second + hs.hops[h].cj;
            const Vec2 p = hs.has_basis ? position(ci, cj)
                                        : Vec2{lay.points[static_cast<std::size_t>(i)].x + hs.hops[h].d.x,
                                               lay.points[static_cast<std::size_t>(i)].y + hs.hops[h].d.y};
            if (!inside(p, half)) continue;
            const auto key = key_of(p, ci, cj);
            if (index.count(key)) continue;
            const int j = static_cast<int>(lay.points.size());
            if (j >= max_points)
                throw GridTooLargeError("ray grid exceeds " + std::to_string(max_points) + " points");
            index.emplace(key, j);
            lay.points.push_back(p);
            coords.emplace_back(ci, cj);
            queue.push_back(j);
        }
    }
    lay.target.assign(hs.hops.size(), std::vector<int>(lay.points.size(), -1));
    for (std::size_t i = 0; i < lay.points.size(); ++i) {
        lay.target[0][i] = static_cast<int>(i);
        for (std::size_t h = 1; h < hs.hops.size(); ++h) {
            const long ci = coords[i].first + hs.hops[h].ci;
            const long cj = coords[i].second + hs.hops[h].cj;
            const Vec2 p{lay.points[i].x + hs.hops[h].d.x, lay.points[i].y + hs.hops[h].d.y};
            const auto it = index.find(key_of(p, ci, cj));
            if (it != index.end()) lay.target[h][i] = it->second;
        }
    }
    return lay;
}

// Rhombic torus of period P in the ray-lattice coordinates.
Layout wrapped_layout(const HopSet& hs, double box, int max_points) {
    if (!hs.has_basis) throw ValidationError("wrapped ray grids need an integer displacement basis");
    const double hop = std::hypot(hs.d1.x, hs.d1.y);
    const long period = std::max(1L, std::lround(box / hop));
    if (period * period > max_points)
        throw GridTooLargeError("ray grid exceeds " + std::to_string(max_points) + " points");
    Layout lay;
    const long c = period / 2;
    auto idx = [&](long i, long j) {
        i = ((i % period) + period) % period;
        j = ((j % period) + period) % period;
        return static_cast<int>(i * period + j);
    };
    for (long i = 0; i < period; ++i)
        for (long j = 0; j < period; ++j)
            lay.points.push_back({(i - c) * hs.d1.x + (j - c) * hs.d2.x, (i - c) * hs.d1.y + (j - c) * hs.d2.y});
    lay.start = idx(c, c);
    lay.target.assign(hs.hops.size(), std::vector<int>(lay.points.size(), -1));
    for (long i = 0; i < period; ++i)
        for (long j = 0; j < period; ++j)
            for (std::size_t h = 0; h < hs.hops.size(); ++h)
                lay.target[h][static_cast<std::size_t>(idx(i, j))] = idx(i + hs.hops[h].ci, j + hs.hops[h].cj);
    return lay;
}

using SparseC = Eigen::SparseMatrix<cplx>;

SparseC hop_matrix(const HopSet& hs, const Layout& lay, bool ab, double scale) {
    std::vector<Eigen::Triplet<cplx>> trip;
    for (std::size_t h = 0; h < hs.hops.size(); ++h) {
        const cplx v = scale * hs.hops[h].amplitude * (ab ? hs.hops[h].phase_ab : hs.hops[h].phase_ba);
        for (std::size_t i = 0; i < lay.points.size(); ++i) {
            const int j = lay.target[h][i];
            if (j >= 0) trip.emplace_back(j, static_cast<int>(i), v);
        }
    }
    const auto m = static_cast<Eigen::Index>(lay.points.size());
    SparseC s(m, m);
    s.setFromTriplets(trip.begin(), trip.end());
    return s;
}

struct Bounce {
    SparseC s_ab;
    SparseC s_ba;
    cplx r1;
};

Bounce make_bounce(const HopSet& hs, const Layout& lay, double eta) {
    return {hop_matrix(hs, lay, true, 1.0 - eta), hop_matrix(hs, lay, false, 1.0 - eta),
            (1.0 - eta) * hs.hops[0].amplitude};
}

// out = r1 [a_in + S_t^{AB} x_B], (1 - S_r^{BA} S_r^{AB}) x_B = S_t^{BA} a_in.
std::optional<Eigen::MatrixXcd> propagate(const Bounce& b, const Eigen::MatrixXcd& a_in, cplx prop0) {
    const auto m = b.s_ab.rows();
    SparseC id(m, m);
    id.setIdentity();
    SparseC system = id - b.s_ba * b.s_ab;
    system.makeCompressed();
    Eigen::SparseLU<SparseC, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(system);
    if (lu.info() != Eigen::Success) return std::nullopt;
    const Eigen::MatrixXcd rhs = b.s_ba * a_in + prop0 * a_in;
    const Eigen::MatrixXcd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) return std::nullopt;
    // Reject solutions dominated by a near-null space.
    const double growth = x.cwiseAbs().maxCoeff() / std::max(1e-300, rhs.cwiseAbs().maxCoeff() + 1e-300);
    if (!(growth < 1e12)) return std::nullopt;
    return Eigen::MatrixXcd(b.r1 * (a_in + b.s_ab * x + prop0 * x));
}

Eigen::MatrixXcd propagate_limit(const HopSet& hs, const Layout& lay, const Eigen::MatrixXcd& a_in) {
    const cplx prop0 = hs.hops[0].phase_ba;  // e^{i k a_z}: the specular leg has no shift phase
    if (auto out = propagate(make_bounce(hs, lay, 0.0), a_in, prop0)) return *out;
    const double eta = 1e-7;
    auto f = [&](double e) {
        auto out = propagate(make_bounce(hs, lay, e), a_in, prop0);
        if (!out) throw SingularMatrixError("ray bounce system is singular");
        return *out;
    };
    return 2.0 * f(eta) - f(2.0 * eta);
}

double box_of(const StackSpec& spec, const RayOptions& options) {
    const double box = options.box.value_or(spec.linear_size());
    if (!(box > 0.0)) throw ValidationError("ray box must be positive");
    return box;
}

void check_two_layers(const StackSpec& spec) {
    spec.validate();
    if (spec.n_z != 2) throw ValidationError("the ray engine handles two layers");
}

}  // namespace

RayGrid build_ray_grid(const StackSpec& spec, const RayOptions& options) {
    check_two_layers(spec);
    const HopSet hs = make_hops(spec, options);
    const double box = box_of(spec, options);
    const Layout lay = options.wrap ? wrapped_layout(hs, box, options.max_points)
                                    : clipped_layout(hs, Vec2{}, box, options.max_points);
    RayGrid g;
    g.points = lay.points;
    g.center = lay.start;
    g.box = box;
    for (std::size_t h = 1; h < hs.hops.size(); ++h) g.displacements.push_back(hs.hops[h].d);
    const Bounce b = make_bounce(hs, lay, 0.0);
    g.s_r_ab = b.s_ab;
    g.s_r_ba = b.s_ba;
    g.a_in = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(lay.points.size()));
    g.a_in(g.center) = 1.0;
    return g;
}

RayResult finite_ray_reflectivity(const StackSpec& spec, double waist, const RayOptions& options) {
    check_two_layers(spec);
    if (!(waist > 0.0)) throw ValidationError("waist must be positive");
    const HopSet hs = make_hops(spec, options);
    const double box = box_of(spec, options);
    const double inv2w2 = std::isinf(waist) ? 0.0 : 1.0 / (2.0 * waist * waist);
    RayResult res;

    if (options.injection == Injection::central_ray || options.wrap || hs.hops.size() < 2) {
        res.grid = build_ray_grid(spec, options);
        RayGrid& g = res.grid;
        const Layout lay = options.wrap ? wrapped_layout(hs, box, options.max_points)
                                        : clipped_layout(hs, Vec2{}, box, options.max_points);
        const auto m = static_cast<Eigen::Index>(lay.points.size());
        if (options.store_scattering) {
            g.s = propagate_limit(hs, lay, Eigen::MatrixXcd::Identity(m, m));
            g.a = g.s->col(g.center);
        } else {
            g.a = propagate_limit(hs, lay, g.a_in).col(0);
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            const Vec2 p = lay.points[static_cast<std::size_t>(i)];
            res.r += g.a(i) * std::exp(-(p.x * p.x + p.y * p.y) * inv2w2);
        }
        // The lossless reference (r1 = -1) gives |r| = 1.
        res.r0 = std::abs(res.r);
        return res;
    }

    if (!hs.has_basis) throw ValidationError("beam injection needs an integer displacement basis");
    if (std::isinf(waist)) throw ValidationError("beam injection needs a finite waist");
    // The Gaussian input u = exp(-rho^2/w^2) is resolved into rays on the
    // lattices o + {i d1 + j d2}; each offset class is one linear solve, and
    // r = sum_o <u, S u>_o / sum_o <u, u>_o with u sampled on the same rays.
    const int k = std::max(1, options.beam_offsets);
    const double inv_w2 = 1.0 / (waist * waist);
    auto u = [&](Vec2 p) { return std::exp(-(p.x * p.x + p.y * p.y) * inv_w2); };
    cplx num{0.0, 0.0};
    double den = 0.0;
    const double reach = 6.0 * waist + 0.5 * std::sqrt(2.0) * box;
    const double hop = std::min(std::hypot(hs.d1.x, hs.d1.y), std::hypot(hs.d2.x, hs.d2.y));
    const double sin12 = std::abs(hs.d1.x * hs.d2.y - hs.d1.y * hs.d2.x) /
                         (std::hypot(hs.d1.x, hs.d1.y) * std::hypot(hs.d2.x, hs.d2.y));
    const long span = static_cast<long>(std::ceil(reach / (hop * sin12))) + 2;
    for (int s = 0; s < k; ++s) {
        for (int t = 0; t < k; ++t) {
            const double fs = (s + 0.5) / k - 0.5;
            const double ft = (t + 0.5) / k - 0.5;
            const Vec2 o{fs * hs.d1.x + ft * hs.d2.x, fs * hs.d1.y + ft * hs.d2.y};
            for (long i = -span; i <= span; ++i)
                for (long j = -span; j <= span; ++j) {
                    const Vec2 p{o.x + i * hs.d1.x + j * hs.d2.x, o.y + i * hs.d1.y + j * hs.d2.y};
                    const double v = u(p);
                    den += v * v;
                }
            const Layout lay = clipped_layout(hs, o, box, options.max_points);
            if (lay.points.empty()) continue;
            const auto m = static_cast<Eigen::Index>(lay.points.size());
            Eigen::MatrixXcd in(m, 1);
            for (Eigen::Index i = 0; i < m; ++i) in(i, 0) = u(lay.points[static_cast<std::size_t>(i)]);
            const Eigen::MatrixXcd out = propagate_limit(hs, lay, in);
            for (Eigen::Index i = 0; i < m; ++i) num += out(i, 0) * in(i, 0);
            if (s == k / 2 && t == k / 2) {
                res.grid.points = lay.points;
                res.grid.a_in = in.col(0);
                res.grid.a = out.col(0);
            }
        }
    }
    res.grid.box = box;
    for (std::size_t h = 1; h < hs.hops.size(); ++h) res.grid.displacements.push_back(hs.hops[h].d);
    res.r = num / den;
    res.r0 = std::abs(res.r);
    return res;
}

ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& series, double n_min, int min_points) {
    std::vector<double> x, y;
    for (const auto& [n, v] : series) {
        if (n < n_min) continue;
        if (!(n > 0.0) || !(v > 0.0)) throw ValidationError("scaling_fit needs positive N and 1 - r0");
        x.push_back(std::log(n));
        y.push_back(std::log(v));
    }
    if (static_cast<int>(x.size()) < std::max(2, min_points))
        throw InsufficientPointsError("scaling_fit needs at least " + std::to_string(std::max(2, min_points)) +
                                      " points with N >= N_min");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw InsufficientPointsError("scaling_fit needs distinct N values");
    ScalingFit fit;
    fit.exponent = sxy / sxx;
    const double intercept = my - fit.exponent * mx;
    fit.prefactor = std::exp(intercept);
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (intercept + fit.exponent * x[i]);
        fit.residuals.push_back(r);
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / n);
    fit.points = static_cast<int>(x.size());
    return fit;
}

}  // namespace superwave
