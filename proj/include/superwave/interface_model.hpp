#pragma once

// Analytic single-mode interface model for layered arrays: interlayer kernel,
// target/loss rates, efficiency r0, resonant-spacing curves and multilayer
// shift designs.

#include <optional>
#include <vector>

#include "superwave/lattice.hpp"

namespace superwave {

// Evanescent terms of the interlayer kernel are kept while |kz| * distance
// stays below this; dropped terms are below exp(-40).
inline constexpr double kEvanescentCutoff = 40.0;

struct InterfaceParams {
    double gamma_target = 0.0;  // Gamma
    // Real part: loss rate. Imaginary part: shift of the symmetric mode
    // relative to the single-layer resonance.
    cplx gamma_diff{0.0, 0.0};
    // Single-layer collective shift; only a numerical resonance scan fills it.
    std::optional<double> delta_shift;
    double r0 = 1.0;
    // Set when |Im gamma_diff| > 1e-3 Gamma.
    bool shifted_resonance = false;
};

// r0 = Gamma / (Gamma + Re gamma_diff).
double efficiency(double gamma_target, cplx gamma_diff);

enum class KernelPart {
    full,       // radiative plus evanescent orders
    radiative,  // radiative orders only
};

struct KernelValue {
    cplx value{0.0, 0.0};
    // Magnitude of the evanescent terms on the outermost ring of the window
    // plus everything dropped by the cutoff; a bound-like estimate of the
    // truncation error.
    double truncation_residual = 0.0;
};

// D_{l l'} = sum_m (Gamma_m / 2) exp(i kz_m a_z |l - l'|) exp(-i Q_m.(b_l - b_l')).
// Throws DivergentKernelError for l == l' with KernelPart::full.
KernelValue interlayer_kernel(const StackSpec& spec, int l, int lp, int m_max,
                              KernelPart part = KernelPart::full);

// Gamma = 2 Gamma0 and the two-layer loss sum over radiative orders.
InterfaceParams two_layer_params(const StackSpec& spec);

struct MultilayerResult {
    InterfaceParams params;
    cplx eigenvalue{0.0, 0.0};  // v^dagger D v
    double eigen_residual = 0.0;
};

// Builds the n_z x n_z kernel (radiative diagonal; off-diagonal per
// `off_diagonal`) and projects it on v_l = exp(-i k l a_z)/sqrt(n_z).
// gamma_diff = 2 v^dagger D v - n_z Gamma0. Requires half-integer a_z.
// Throws NotAnEigenmodeError when ||Dv - (v^dagger D v) v|| > tol.
MultilayerResult multilayer_params(const StackSpec& spec, int m_max,
                                   KernelPart off_diagonal = KernelPart::full,
                                   double tol = 1e-10);

enum class Branch {
    opposing,  // exp(i k a_z) exp(i kz a_z) = -1
    matched,   // exp(i k a_z) exp(i kz a_z) = +1
};

struct ResonantCurve {
    Branch branch = Branch::opposing;
    int n = 0;
    std::vector<std::pair<double, double>> points;  // (a_z, a)
    Lattice lattice = Lattice::square;
    bool shifted = false;
};

// Branch used by a bilayer: half-cell shifted square layers need matched
// phases, unshifted layers opposing ones. Shifted triangular layers have no
// uniform first-shell shift phase and are rejected.
Branch branch_for(Lattice lattice, bool shifted);

// a_z on the n-th curve at lattice spacing a.
double resonant_interlayer_spacing(Lattice lattice, bool shifted, int n, double a);

// Lattice spacing on the n-th curve at interlayer spacing a_z; empty when the
// curve does not reach a_z inside the single-shell window.
std::optional<double> resonant_lattice_spacing(Lattice lattice, bool shifted, int n, double a_z);

// Exact resonance nearest to a nominal (rounded) configuration.
struct SnappedResonance {
    int n;
    double a;
};
SnappedResonance snap_to_resonance(Lattice lattice, bool shifted, double a_z, double a_nominal);

// Requires [a_min, a_max] inside the open single-shell window.
std::vector<ResonantCurve> resonant_spacing_curves(Lattice lattice, bool shifted, double a_min,
                                                   double a_max, int n_min, int n_max,
                                                   int samples);

struct ScanRow {
    double a_z = 0.0;
    double a = 0.0;
    cplx gamma_diff{0.0, 0.0};
    double r0 = 1.0;
    // Per radiative shell: distance of the interlayer phase to the nearest
    // cancelling value, in units of 2 pi (max over the shell's orders).
    std::vector<double> shell_residues;
};

// Phase residues of a two-layer stack, one per radiative shell.
std::vector<double> shell_phase_residues(const StackSpec& spec);

std::vector<ScanRow> multiorder_scan(Lattice lattice, bool shifted, const std::vector<double>& a_values,
                                     const std::vector<double>& a_z_values);

struct MultilayerDesign {
    double a_z = 0.0;
    double a = 0.0;
    std::vector<Vec2> shifts;
    cplx gamma_diff{0.0, 0.0};
    double eigen_residual = 0.0;
    std::vector<int> shell_integers;  // (1 + kz) a_z per shell
};

struct DesignOptions {
    int n_z = 4;
    double integer_tolerance = 5e-3;
    double gamma_diff_tolerance = 1e-8;  // in units of Gamma0
    // Candidates whose symmetric mode is an eigenmode only up to evanescent
    // near-field couplings are kept; the residual is reported per design.
    double eigen_tolerance = 1e-6;
};

// Searches half-integer a_z <= a_z_max and a inside (a_min, a_max) for matched
// phases on every radiative shell, refines a by Gauss-Newton, and keeps the
// candidates multilayer_params confirms with quarter-cell shifts.
std::vector<MultilayerDesign> design_multilayer_shifts(Lattice lattice, double a_min, double a_max,
                                                       double a_z_max,
                                                       const DesignOptions& options = {});

}  // namespace superwave
