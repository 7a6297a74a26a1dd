#include "superwave/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "superwave/errors.hpp"

namespace superwave {

namespace {

struct Grid {
    Vec2 origin;
    double hx;
    double hy;
    long ix_lo, ix_hi, iy_lo, iy_hi;

    long nx() const { return ix_hi - ix_lo + 1; }
    long ny() const { return iy_hi - iy_lo + 1; }
    double x(long ix) const { return origin.x + ix * hx; }
    double y(long iy) const { return origin.y + iy * hy; }
};

// Smallest grid of the given steps covering the square aperture around
// `center`; symmetric about the centre when the centre is on the half-grid.
Grid cover(Vec2 origin, double hx, double hy, Vec2 center, double side) {
    Grid g{origin, hx, hy, 0, 0, 0, 0};
    const double half = 0.5 * side;
    g.ix_lo = static_cast<long>(std::floor((center.x - half - origin.x) / hx + 1e-9));
    g.ix_hi = static_cast<long>(std::ceil((center.x + half - origin.x) / hx - 1e-9));
    g.iy_lo = static_cast<long>(std::floor((center.y - half - origin.y) / hy + 1e-9));
    g.iy_hi = static_cast<long>(std::ceil((center.y + half - origin.y) / hy - 1e-9));
    return g;
}

// conj(u) / sum |u|^2 sampled on the grid, split into real/imag planes.
struct Weights {
    std::vector<double> re;
    std::vector<double> im;
};

Weights mode_weights(const Grid& g, const BeamSpec& mode, double z) {
    Weights w;
    const std::size_t count = static_cast<std::size_t>(g.nx() * g.ny());
    w.re.resize(count);
    w.im.resize(count);
    double norm = 0.0;
    std::size_t k = 0;
    for (long iy = g.iy_lo; iy <= g.iy_hi; ++iy) {
        for (long ix = g.ix_lo; ix <= g.ix_hi; ++ix, ++k) {
            const cplx u = gaussian_mode_field(mode, {g.x(ix), g.y(iy), z});
            w.re[k] = u.real();
            w.im[k] = -u.imag();
            norm += std::norm(u);
        }
    }
    for (std::size_t i = 0; i < count; ++i) {
        w.re[i] /= norm;
        w.im[i] /= norm;
    }
    return w;
}

Eigen::VectorXcd weights_direct(const std::vector<Vec3>& pos, const Grid& g, const Weights& w, double z) {
    Eigen::VectorXcd out(static_cast<Eigen::Index>(pos.size()));
    for (std::size_t j = 0; j < pos.size(); ++j) {
        double acc_re = 0.0;
        double acc_im = 0.0;
        std::size_t k = 0;
        const double dz = z - pos[j].z;
        for (long iy = g.iy_lo; iy <= g.iy_hi; ++iy) {
            const double dy = g.y(iy) - pos[j].y;
            for (long ix = g.ix_lo; ix <= g.ix_hi; ++ix, ++k) {
                const cplx gv = greens_coupling_unchecked(g.x(ix) - pos[j].x, dy, dz);
                acc_re += gv.real() * w.re[k] - gv.imag() * w.im[k];
                acc_im += gv.real() * w.im[k] + gv.imag() * w.re[k];
            }
        }
        out(static_cast<Eigen::Index>(j)) = {acc_re, acc_im};
    }
    return out;
}

struct LatticeIndex {
    long ix;
    long iy;
};

std::optional<std::vector<LatticeIndex>> align_atoms(const std::vector<Vec3>& pos, const GridAlignment& al) {
    std::vector<LatticeIndex> idx;
    idx.reserve(pos.size());
    for (const auto& p : pos) {
        const double fx = (p.x - al.origin.x) / al.hx;
        const double fy = (p.y - al.origin.y) / al.hy;
        const double rx = std::round(fx);
        const double ry = std::round(fy);
        if (std::abs(fx - rx) > 1e-7 || std::abs(fy - ry) > 1e-7) return std::nullopt;
        idx.push_back({static_cast<long>(rx), static_cast<long>(ry)});
    }
    return idx;
}

// Every atom of one layer sees the same kernel up to an integer grid offset:
// K(dx, dy) = g(dx hx, dy hy, z - z_layer) is evaluated once on the span of
// offsets and each atom's weight becomes a strided correlation.
Eigen::VectorXcd weights_tabulated(const std::vector<Vec3>& pos, const std::vector<LatticeIndex>& idx,
                                   const Grid& g, const Weights& w, double z) {
    Eigen::VectorXcd out(static_cast<Eigen::Index>(pos.size()));
    std::map<double, std::vector<std::size_t>> layers;
    for (std::size_t j = 0; j < pos.size(); ++j) layers[pos[j].z].push_back(j);

    const long nx = g.nx();
    for (const auto& [zl, members] : layers) {
        long ax_lo = idx[members.front()].ix, ax_hi = ax_lo;
        long ay_lo = idx[members.front()].iy, ay_hi = ay_lo;
        for (std::size_t j : members) {
            ax_lo = std::min(ax_lo, idx[j].ix);
            ax_hi = std::max(ax_hi, idx[j].ix);
            ay_lo = std::min(ay_lo, idx[j].iy);
            ay_hi = std::max(ay_hi, idx[j].iy);
        }
        const long dx_lo = g.ix_lo - ax_hi;
        const long dy_lo = g.iy_lo - ay_hi;
        const long kw = (g.ix_hi - ax_lo) - dx_lo + 1;
        const long kh = (g.iy_hi - ay_lo) - dy_lo + 1;
        const double dz = z - zl;
        std::vector<double> kr(static_cast<std::size_t>(kw * kh));
        std::vector<double> ki(kr.size());
        for (long r = 0; r < kh; ++r) {
            const double dy = (dy_lo + r) * g.hy;
            for (long c = 0; c < kw; ++c) {
                const cplx gv = greens_coupling_unchecked((dx_lo + c) * g.hx, dy, dz);
                kr[static_cast<std::size_t>(r * kw + c)] = gv.real();
                ki[static_cast<std::size_t>(r * kw + c)] = gv.imag();
            }
        }
        for (std::size_t j : members) {
            double acc_re = 0.0;
            double acc_im = 0.0;
            const long c0 = g.ix_lo - idx[j].ix - dx_lo;
            for (long gy = 0; gy < g.ny(); ++gy) {
                const long r = g.iy_lo + gy - idx[j].iy - dy_lo;
                const double* pr = kr.data() + r * kw + c0;
                const double* pi = ki.data() + r * kw + c0;
                const double* wr = w.re.data() + gy * nx;
                const double* wi = w.im.data() + gy * nx;
                double sr = 0.0;
                double si = 0.0;
                for (long c = 0; c < nx; ++c) {
                    sr += pr[c] * wr[c] - pi[c] * wi[c];
                    si += pr[c] * wi[c] + pi[c] * wr[c];
                }
                acc_re += sr;
                acc_im += si;
            }
            out(static_cast<Eigen::Index>(j)) = {acc_re, acc_im};
        }
    }
    return out;
}

}  // namespace

void OverlapOptions::validate() const {
    if (!(aperture_factor >= 8.0))
        throw OverlapContractError("detection aperture must be at least 8 beam waists wide");
    if (!(step > 0.0 && step <= 0.25))
        throw OverlapContractError("detection grid step must lie in (0, 0.25] wavelengths");
    if (!(min_plane_distance > 0.0))
        throw OverlapContractError("detection plane distance must be positive");
}

GridAlignment lattice_alignment(const StackSpec& spec, double step) {
    const double ay = spec.a * std::sin(spec.psi);
    const int kx = 4 * static_cast<int>(std::ceil(spec.a / (4.0 * step)));
    const int ky = 4 * static_cast<int>(std::ceil(ay / (4.0 * step)));
    return {Vec2{}, spec.a / kx, ay / ky};
}

ModeProjector::ModeProjector(const std::vector<Vec3>& positions, const BeamSpec& beam,
                             const OverlapOptions& options, std::optional<GridAlignment> alignment) {
    options.validate();
    beam.validate();
    if (positions.empty()) {
        reflect_ = Eigen::VectorXcd(0);
        if (options.transmission) transmit_ = Eigen::VectorXcd(0);
        return;
    }

    const double sign = static_cast<double>(static_cast<int>(beam.direction));
    double z_min = positions.front().z;
    double z_max = z_min;
    for (const auto& p : positions) {
        z_min = std::min(z_min, p.z);
        z_max = std::max(z_max, p.z);
    }
    const double gap = std::max(options.min_plane_distance, 0.5 * beam.rayleigh_range());
    const double entrance = sign > 0 ? z_min : z_max;
    const double exit = sign > 0 ? z_max : z_min;
    z_reflect_ = entrance - sign * gap;
    z_transmit_ = exit + sign * gap;

    const Vec2 center{beam.focus.x, beam.focus.y};
    const double side = options.aperture_factor * beam.waist;

    std::optional<std::vector<LatticeIndex>> idx;
    if (alignment && options.method != OverlapMethod::direct) idx = align_atoms(positions, *alignment);
    if (options.method == OverlapMethod::tabulated && !idx)
        throw OverlapContractError("atoms are not commensurate with the tabulation grid");

    Grid grid = alignment ? cover(alignment->origin, alignment->hx, alignment->hy, center, side)
                          : cover(center, options.step, options.step, center, side);
    grid_points_ = static_cast<int>(grid.nx() * grid.ny());
    tabulated_ = idx.has_value();

    auto project = [&](const BeamSpec& mode, double z) {
        const Weights w = mode_weights(grid, mode, z);
        return tabulated_ ? weights_tabulated(positions, *idx, grid, w, z)
                          : weights_direct(positions, grid, w, z);
    };
    reflect_ = project(beam.reversed(), z_reflect_);
    if (options.transmission) transmit_ = project(beam, z_transmit_);
}

cplx ModeProjector::reflection(const Eigen::VectorXcd& dipoles) const {
    if (dipoles.size() != reflect_.size()) throw ValidationError("dipole vector has the wrong length");
    return (reflect_.array() * dipoles.array()).sum();
}

std::optional<cplx> ModeProjector::transmission(const Eigen::VectorXcd& dipoles) const {
    if (!transmit_) return std::nullopt;
    if (dipoles.size() != transmit_->size()) throw ValidationError("dipole vector has the wrong length");
    return 1.0 + (transmit_->array() * dipoles.array()).sum();
}

}  // namespace superwave
