#include "superwave/interface_model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "superwave/errors.hpp"

namespace superwave {

namespace {

double distance_to_integer(double x) { return std::abs(x - std::round(x)); }

bool is_half_integer(double x) { return distance_to_integer(2.0 * x) < 1e-9; }

// Target value of (1 + kz/k) a_z for the given branch and curve index.
double branch_target(Branch branch, int n) {
    return branch == Branch::matched ? static_cast<double>(n) : n + 0.5;
}

}  // namespace

double efficiency(double gamma_target, cplx gamma_diff) {
    return gamma_target / (gamma_target + gamma_diff.real());
}

KernelValue interlayer_kernel(const StackSpec& spec, int l, int lp, int m_max, KernelPart part) {
    spec.validate();
    if (l < 0 || lp < 0 || l >= spec.n_z || lp >= spec.n_z)
        throw ValidationError("interlayer_kernel: layer index out of range");
    const int dist = std::abs(l - lp);
    if (dist == 0 && part == KernelPart::full) {
        throw DivergentKernelError(
            "on-site evanescent lattice sum diverges; request KernelPart::radiative for l == l'");
    }
    const Vec2 bl = spec.shifts[static_cast<std::size_t>(l)];
    const Vec2 blp = spec.shifts[static_cast<std::size_t>(lp)];
    const Vec2 db{bl.x - blp.x, bl.y - blp.y};
    const double span = spec.a_z * dist;

    KernelValue out;
    for (const auto& o : enumerate_orders(spec, m_max)) {
        const cplx lateral = std::exp(-kI * dot(o.q, db));
        if (o.radiative) {
            out.value += 0.5 * o.gamma_m * std::exp(kI * (kWavenumber * o.kz_ratio * span)) * lateral;
            continue;
        }
        if (part == KernelPart::radiative) continue;
        const double decay = kWavenumber * o.kz_ratio * span;
        const cplx term = 0.5 * o.gamma() * std::exp(-decay) * lateral;
        if (decay > kEvanescentCutoff) {
            out.truncation_residual += std::abs(term);
            continue;
        }
        out.value += term;
        if (std::max(std::abs(o.m1), std::abs(o.m2)) == m_max)
            out.truncation_residual += std::abs(term);
    }
    return out;
}

InterfaceParams two_layer_params(const StackSpec& spec) {
    spec.validate();
    if (spec.n_z != 2) throw ValidationError("two_layer_params requires exactly two layers");
    const double g0 = spec.gamma0();
    const Vec2 b1 = spec.shifts[1];
    const cplx front = std::exp(kI * (kWavenumber * spec.a_z));

    InterfaceParams p;
    p.gamma_target = 2.0 * g0;
    for (const auto& o : radiative_orders(spec)) {
        if (o.is_zero()) continue;
        const cplx longitudinal = std::exp(kI * (kWavenumber * o.kz_ratio * spec.a_z));
        p.gamma_diff += o.gamma_m * (1.0 + front * longitudinal * std::exp(kI * dot(o.q, b1)));
    }
    p.r0 = efficiency(p.gamma_target, p.gamma_diff);
    p.shifted_resonance = std::abs(p.gamma_diff.imag()) > 1e-3 * p.gamma_target;
    return p;
}

MultilayerResult multilayer_params(const StackSpec& spec, int m_max, KernelPart off_diagonal,
                                   double tol) {
    spec.validate();
    if (spec.n_z < 2) throw ValidationError("multilayer_params requires at least two layers");
    if (!is_half_integer(spec.a_z))
        throw ValidationError("multilayer_params requires a half-integer interlayer spacing");

    const int n = spec.n_z;
    Eigen::MatrixXcd d(n, n);
    for (int l = 0; l < n; ++l) {
        for (int lp = 0; lp < n; ++lp) {
            const KernelPart part = l == lp ? KernelPart::radiative : off_diagonal;
            d(l, lp) = interlayer_kernel(spec, l, lp, m_max, part).value;
        }
    }
    Eigen::VectorXcd v(n);
    for (int l = 0; l < n; ++l) v(l) = std::exp(-kI * (kWavenumber * l * spec.a_z)) / std::sqrt(double(n));

    const Eigen::VectorXcd dv = d * v;
    MultilayerResult out;
    out.eigenvalue = v.dot(dv);  // conjugates v
    out.eigen_residual = (dv - out.eigenvalue * v).norm();
    if (out.eigen_residual > tol) {
        throw NotAnEigenmodeError("symmetric layer mode is not a kernel eigenmode (residual " +
                                      std::to_string(out.eigen_residual) + ")",
                                  out.eigen_residual);
    }
    const double g0 = spec.gamma0();
    out.params.gamma_target = n * g0;
    out.params.gamma_diff = 2.0 * out.eigenvalue - out.params.gamma_target;
    out.params.r0 = efficiency(out.params.gamma_target, out.params.gamma_diff);
    out.params.shifted_resonance =
        std::abs(out.params.gamma_diff.imag()) > 1e-3 * out.params.gamma_target;
    return out;
}

Branch branch_for(Lattice lattice, bool shifted) {
    if (!shifted) return Branch::opposing;
    if (lattice == Lattice::square) return Branch::matched;
    throw ValidationError("half-cell shifted triangular bilayers have no uniform first-shell phase");
}

double resonant_interlayer_spacing(Lattice lattice, bool shifted, int n, double a) {
    const double q = first_shell_factor(lattice) / a;
    if (!(q < 1.0)) throw ValidationError("first diffraction shell is not radiative at this a");
    const double kz = std::sqrt(1.0 - q * q);
    return branch_target(branch_for(lattice, shifted), n) / (1.0 + kz);
}

std::optional<double> resonant_lattice_spacing(Lattice lattice, bool shifted, int n, double a_z) {
    const double kz = branch_target(branch_for(lattice, shifted), n) / a_z - 1.0;
    if (!(kz > 0.0 && kz < 1.0)) return std::nullopt;
    const double a = first_shell_factor(lattice) / std::sqrt(1.0 - kz * kz);
    const ShellWindow win = single_shell_window(lattice);
    if (!(a > win.lower && a < win.upper)) return std::nullopt;
    return a;
}

SnappedResonance snap_to_resonance(Lattice lattice, bool shifted, double a_z, double a_nominal) {
    std::optional<SnappedResonance> best;
    const int lo = std::max(0, static_cast<int>(std::floor(a_z)) - 1);
    const int hi = static_cast<int>(std::ceil(2.0 * a_z)) + 1;
    for (int n = lo; n <= hi; ++n) {
        const auto a = resonant_lattice_spacing(lattice, shifted, n, a_z);
        if (!a) continue;
        if (!best || std::abs(*a - a_nominal) < std::abs(best->a - a_nominal)) best = {n, *a};
    }
    if (!best) throw ValidationError("no resonant curve reaches this interlayer spacing");
    return *best;
}

std::vector<ResonantCurve> resonant_spacing_curves(Lattice lattice, bool shifted, double a_min,
                                                   double a_max, int n_min, int n_max,
                                                   int samples) {
    const ShellWindow win = single_shell_window(lattice);
    if (!(a_min > win.lower && a_max < win.upper && a_min <= a_max))
        throw ValidationError("lattice-spacing range must lie inside the single-shell window");
    if (samples < 2 && a_min != a_max) throw ValidationError("need at least two samples per curve");
    if (n_min > n_max) throw ValidationError("empty curve-index range");

    const Branch branch = branch_for(lattice, shifted);
    std::vector<ResonantCurve> curves;
    for (int n = n_min; n <= n_max; ++n) {
        if (branch_target(branch, n) <= 0.0) continue;
        ResonantCurve c;
        c.branch = branch;
        c.n = n;
        c.lattice = lattice;
        c.shifted = shifted;
        const int count = a_min == a_max ? 1 : samples;
        for (int i = 0; i < count; ++i) {
            const double a = count == 1 ? a_min : a_min + (a_max - a_min) * i / (count - 1);
            c.points.emplace_back(resonant_interlayer_spacing(lattice, shifted, n, a), a);
        }
        curves.push_back(std::move(c));
    }
    return curves;
}

std::vector<double> shell_phase_residues(const StackSpec& spec) {
    if (spec.n_z != 2) throw ValidationError("phase residues are defined for two layers");
    const Vec2 b1 = spec.shifts[1];
    std::vector<double> res;
    for (const auto& shell : radiative_shells(spec)) {
        double worst = 0.0;
        for (const auto& o : shell) {
            const double phase = (1.0 + o.kz_ratio) * spec.a_z + dot(o.q, b1) / kWavenumber - 0.5;
            worst = std::max(worst, distance_to_integer(phase));
        }
        res.push_back(worst);
    }
    return res;
}

std::vector<ScanRow> multiorder_scan(Lattice lattice, bool shifted, const std::vector<double>& a_values,
                                     const std::vector<double>& a_z_values) {
    std::vector<ScanRow> rows;
    rows.reserve(a_values.size() * a_z_values.size());
    for (double a_z : a_z_values) {
        for (double a : a_values) {
            const StackSpec spec = make_bilayer(lattice, a, a_z, 1, shifted);
            const InterfaceParams p = two_layer_params(spec);
            rows.push_back({a_z, a, p.gamma_diff, p.r0, shell_phase_residues(spec)});
        }
    }
    return rows;
}

std::vector<MultilayerDesign> design_multilayer_shifts(Lattice lattice, double a_min, double a_max,
                                                       double a_z_max,
                                                       const DesignOptions& options) {
    const ShellWindow win = two_shell_window(lattice);
    if (!(a_min >= win.lower && a_max <= win.upper && a_min < a_max))
        throw ValidationError("lattice-spacing range must lie inside the two-shell window");
    if (options.n_z != 4)
        throw ValidationError("only four-layer quarter-cell designs are supported");

    const double f1 = first_shell_factor(lattice);
    auto stack_at = [&](double a, double a_z) {
        StackSpec s = make_stack(lattice, a, a_z, 1, options.n_z);
        s.shifts = quarter_cell_shifts(lattice, a);
        return s;
    };

    std::vector<MultilayerDesign> found;
    for (int twice = 1; 0.5 * twice <= a_z_max + 1e-12; ++twice) {
        const double a_z = 0.5 * twice;
        for (int n1 = static_cast<int>(std::floor(a_z)) + 1; n1 < 2.0 * a_z; ++n1) {
            const double kz1 = n1 / a_z - 1.0;
            if (!(kz1 > 0.0 && kz1 < 1.0)) continue;
            double a = f1 / std::sqrt(1.0 - kz1 * kz1);
            if (!(a > a_min && a < a_max)) continue;

            // Shell factors |Q_s| a / k are lattice constants.
            std::vector<double> factors;
            std::vector<int> targets;
            bool near = true;
            for (const auto& shell : radiative_shells(stack_at(a, a_z))) {
                const double c = (1.0 + shell.front().kz_ratio) * a_z;
                if (distance_to_integer(c) > options.integer_tolerance) {
                    near = false;
                    break;
                }
                factors.push_back(shell.front().q_ratio * a);
                targets.push_back(static_cast<int>(std::lround(c)));
            }
            if (!near || factors.empty()) continue;

            for (int it = 0; it < 60; ++it) {
                double num = 0.0;
                double den = 0.0;
                for (std::size_t s = 0; s < factors.size(); ++s) {
                    const double q = factors[s] / a;
                    const double kz = std::sqrt(1.0 - q * q);
                    const double r = (1.0 + kz) * a_z - targets[s];
                    const double dr = a_z * q * q / (a * kz);
                    num += r * dr;
                    den += dr * dr;
                }
                const double step = num / den;
                a -= step;
                if (std::abs(step) < 1e-15 * a) break;
            }
            if (!(a > a_min && a < a_max)) continue;

            const StackSpec spec = stack_at(a, a_z);
            if (radiative_shells(spec).size() != factors.size()) continue;
            MultilayerResult res;
            try {
                res = multilayer_params(spec, minimum_order_window(spec) + 4, KernelPart::full,
                                        options.eigen_tolerance);
            } catch (const NotAnEigenmodeError&) {
                continue;
            }
            if (std::abs(res.params.gamma_diff.real()) >= options.gamma_diff_tolerance * spec.gamma0())
                continue;
            const bool dup = std::any_of(found.begin(), found.end(), [&](const MultilayerDesign& d) {
                return d.a_z == a_z && std::abs(d.a - a) < 1e-9;
            });
            if (dup) continue;
            found.push_back({a_z, a, spec.shifts, res.params.gamma_diff, res.eigen_residual, targets});
        }
    }
    return found;
}

}  // namespace superwave
