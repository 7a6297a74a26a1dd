#include "superwave/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "superwave/errors.hpp"

namespace superwave {

namespace {

constexpr double kShellTolerance = 1e-9;

// Lattice index pairs of the patch, n1-major.
std::vector<std::pair<int, int>> patch_indices(const StackSpec& spec) {
    std::vector<std::pair<int, int>> idx;
    const int n = spec.n_side;
    idx.reserve(static_cast<std::size_t>(n) * n);
    if (spec.patch == PatchShape::rhombus) {
        for (int n1 = 1; n1 <= n; ++n1)
            for (int n2 = 1; n2 <= n; ++n2) idx.emplace_back(n1, n2);
        return idx;
    }

    const double c = 0.5 * (n + 1);
    const double cpsi = std::cos(spec.psi);
    const double spsi = std::sin(spec.psi);
    const double cx = c + c * cpsi;
    const double cy = c * spsi;
    struct Candidate {
        double d2;
        int n1;
        int n2;
    };
    std::vector<Candidate> cand;
    const int lo = 1 - n;
    const int hi = 2 * n;
    for (int n1 = lo; n1 <= hi; ++n1) {
        for (int n2 = lo; n2 <= hi; ++n2) {
            const double x = n1 + n2 * cpsi - cx;
            const double y = n2 * spsi - cy;
            cand.push_back({x * x + y * y, n1, n2});
        }
    }
    std::sort(cand.begin(), cand.end(), [](const Candidate& l, const Candidate& r) {
        const auto dl = std::llround(l.d2 * 1e9);
        const auto dr = std::llround(r.d2 * 1e9);
        if (dl != dr) return dl < dr;
        if (l.n1 != r.n1) return l.n1 < r.n1;
        return l.n2 < r.n2;
    });
    cand.resize(static_cast<std::size_t>(n) * n);
    std::sort(cand.begin(), cand.end(), [](const Candidate& l, const Candidate& r) {
        return l.n1 != r.n1 ? l.n1 < r.n1 : l.n2 < r.n2;
    });
    for (const auto& c2 : cand) idx.emplace_back(c2.n1, c2.n2);
    return idx;
}

}  // namespace

double lattice_angle(Lattice lattice) {
    return lattice == Lattice::square ? kPi / 2.0 : kPi / 3.0;
}

Lattice lattice_of(const StackSpec& spec) {
    if (std::abs(spec.psi - kPi / 2.0) < 1e-12) return Lattice::square;
    if (std::abs(spec.psi - kPi / 3.0) < 1e-12) return Lattice::triangular;
    throw ValidationError("lattice angle is neither square nor triangular");
}

void StackSpec::validate() const {
    std::ostringstream why;
    if (!(a > 0.0)) why << "a must be positive; ";
    if (!(a_z > 0.0)) why << "a_z must be positive; ";
    if (!(psi > 0.0 && psi < kPi)) why << "psi must lie in (0, pi); ";
    if (n_side < 1) why << "n_side must be >= 1; ";
    if (n_z < 1) why << "n_z must be >= 1; ";
    if (static_cast<int>(shifts.size()) != n_z)
        why << "expected " << n_z << " layer shifts, got " << shifts.size() << "; ";
    else if (shifts.front().x != 0.0 || shifts.front().y != 0.0)
        why << "layer 0 must be unshifted; ";
    const std::string msg = why.str();
    if (!msg.empty()) throw ValidationError("invalid StackSpec: " + msg);
}

double StackSpec::cell_area() const { return a * a * std::sin(psi); }

double StackSpec::linear_size() const {
    return a * std::sqrt(static_cast<double>(atoms_per_layer()) * std::sin(psi));
}

double StackSpec::gamma0() const { return 3.0 / (4.0 * kPi) / cell_area(); }

Vec2 StackSpec::primitive2() const { return {a * std::cos(psi), a * std::sin(psi)}; }

StackSpec make_stack(Lattice lattice, double a, double a_z, int n_side, int n_z) {
    StackSpec s;
    s.psi = lattice_angle(lattice);
    s.a = a;
    s.a_z = a_z;
    s.n_side = n_side;
    s.n_z = n_z;
    s.shifts.assign(static_cast<std::size_t>(std::max(n_z, 1)), Vec2{});
    return s;
}

StackSpec make_bilayer(Lattice lattice, double a, double a_z, int n_side, bool shifted) {
    StackSpec s = make_stack(lattice, a, a_z, n_side, 2);
    if (shifted) {
        const Vec2 a1 = s.primitive1();
        const Vec2 a2 = s.primitive2();
        s.shifts[1] = {0.5 * (a1.x + a2.x), 0.5 * (a1.y + a2.y)};
    }
    return s;
}

std::vector<Vec2> quarter_cell_shifts(Lattice lattice, double a) {
    const double psi = lattice_angle(lattice);
    const Vec2 a1{a, 0.0};
    const Vec2 a2{a * std::cos(psi), a * std::sin(psi)};
    return {Vec2{},
            {0.5 * a1.x, 0.5 * a1.y},
            {0.5 * a2.x, 0.5 * a2.y},
            {0.5 * (a1.x + a2.x), 0.5 * (a1.y + a2.y)}};
}

std::vector<Vec3> build_positions(const StackSpec& spec) {
    spec.validate();
    const auto idx = patch_indices(spec);
    const double cpsi = std::cos(spec.psi);
    const double spsi = std::sin(spec.psi);
    std::vector<Vec3> pos;
    pos.reserve(idx.size() * static_cast<std::size_t>(spec.n_z));
    for (int l = 0; l < spec.n_z; ++l) {
        const Vec2 b = spec.shifts[static_cast<std::size_t>(l)];
        const double z = l * spec.a_z;
        for (const auto& [n1, n2] : idx) {
            pos.push_back({n1 * spec.a + n2 * spec.a * cpsi + b.x, n2 * spec.a * spsi + b.y, z});
        }
    }
    return pos;
}

Vec2 patch_center(const StackSpec& spec) {
    const auto pos = build_positions(spec);
    Vec2 c;
    for (const auto& p : pos) {
        c.x += p.x;
        c.y += p.y;
    }
    c.x /= static_cast<double>(pos.size());
    c.y /= static_cast<double>(pos.size());
    return c;
}

cplx DiffractionOrder::kz() const {
    return radiative ? cplx{kWavenumber * kz_ratio, 0.0} : cplx{0.0, kWavenumber * kz_ratio};
}

cplx DiffractionOrder::gamma() const {
    return radiative ? cplx{gamma_m, 0.0} : cplx{0.0, -gamma_m};
}

int minimum_order_window(const StackSpec& spec) {
    // |Q| < k bounds |m1| < a and |m2 - m1 cos psi| < a sin psi.
    const double b1 = spec.a;
    const double b2 = spec.a * (std::sin(spec.psi) + std::abs(std::cos(spec.psi)));
    const int spec_rule = static_cast<int>(std::ceil(spec.a)) + 1;
    return std::max({spec_rule, static_cast<int>(std::ceil(b1)), static_cast<int>(std::ceil(b2))});
}

std::vector<DiffractionOrder> enumerate_orders(const StackSpec& spec, int m_max) {
    if (!(spec.a > 0.0) || !(spec.psi > 0.0 && spec.psi < kPi))
        throw ValidationError("enumerate_orders: invalid lattice parameters");
    const int need = minimum_order_window(spec);
    if (m_max < need) {
        throw WindowTooSmallError("order window m_max=" + std::to_string(m_max) +
                                  " may miss radiative orders; need >= " + std::to_string(need));
    }
    const double g0 = spec.gamma0();
    const double cot = std::cos(spec.psi) / std::sin(spec.psi);
    const double csc = 1.0 / std::sin(spec.psi);
    const double scale = kWavenumber / spec.a;

    std::vector<DiffractionOrder> out;
    out.reserve(static_cast<std::size_t>((2 * m_max + 1) * (2 * m_max + 1)));
    for (int m1 = -m_max; m1 <= m_max; ++m1) {
        for (int m2 = -m_max; m2 <= m_max; ++m2) {
            DiffractionOrder o;
            o.m1 = m1;
            o.m2 = m2;
            o.q = {scale * m1, scale * (-m1 * cot + m2 * csc)};
            o.q_ratio = std::hypot(o.q.x, o.q.y) / kWavenumber;
            const double q2 = o.q_ratio * o.q_ratio;
            // |Q.e|^2 = |Q|^2 / 2 for circular e.
            const double angular = 1.0 - 0.5 * q2;
            o.radiative = o.q_ratio < 1.0;
            if (o.radiative) {
                o.kz_ratio = std::sqrt(1.0 - q2);
                o.gamma_m = g0 * angular / o.kz_ratio;
                o.theta_d = std::asin(o.q_ratio);
            } else {
                o.kz_ratio = std::sqrt(q2 - 1.0);
                o.gamma_m = o.kz_ratio > 0.0 ? g0 * angular / o.kz_ratio : 0.0;
            }
            if (o.is_zero()) {
                o.q = {0.0, 0.0};
                o.q_ratio = 0.0;
                o.kz_ratio = 1.0;
                o.gamma_m = g0;
                o.theta_d = 0.0;
            }
            out.push_back(o);
        }
    }
    // Quantised key keeps the comparator a strict weak order while letting
    // symmetry-equivalent orders (equal up to rounding) share a shell.
    auto key = [](const DiffractionOrder& o) { return std::llround(o.q_ratio / kShellTolerance); };
    std::sort(out.begin(), out.end(), [&](const DiffractionOrder& l, const DiffractionOrder& r) {
        const auto kl = key(l);
        const auto kr = key(r);
        if (kl != kr) return kl < kr;
        if (l.m1 != r.m1) return l.m1 < r.m1;
        return l.m2 < r.m2;
    });
    return out;
}

std::vector<DiffractionOrder> radiative_orders(const StackSpec& spec) {
    auto all = enumerate_orders(spec, minimum_order_window(spec));
    std::vector<DiffractionOrder> rad;
    for (const auto& o : all)
        if (o.radiative) rad.push_back(o);
    return rad;
}

std::vector<std::vector<DiffractionOrder>> radiative_shells(const StackSpec& spec) {
    std::vector<std::vector<DiffractionOrder>> shells;
    for (const auto& o : radiative_orders(spec)) {
        if (o.is_zero()) continue;
        if (shells.empty() ||
            std::abs(shells.back().front().q_ratio - o.q_ratio) > 1e-9)
            shells.emplace_back();
        shells.back().push_back(o);
    }
    return shells;
}

double first_shell_factor(Lattice lattice) {
    return lattice == Lattice::square ? 1.0 : 2.0 / std::sqrt(3.0);
}

ShellWindow single_shell_window(Lattice lattice) {
    if (lattice == Lattice::square) return {1.0, std::sqrt(2.0)};
    return {2.0 / std::sqrt(3.0), 2.0};
}

ShellWindow two_shell_window(Lattice lattice) {
    if (lattice == Lattice::square) return {std::sqrt(2.0), 2.0};
    return {2.0, 4.0 / std::sqrt(3.0)};
}

}  // namespace superwave
