#pragma once

// Geometrical-optics picture of a two-layer array: single-layer channel
// amplitudes, the infinite-layer channel resolvent and the finite ray grid.

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "superwave/lattice.hpp"

namespace superwave {

struct LayerChannels {
    std::vector<DiffractionOrder> channels;  // order 0 first, then radiative orders
    double gamma_total = 0.0;                // Gamma0 + gamma1_diff
    double gamma1_diff = 0.0;                // sum of Gamma_m over m != 0
    double r1 = -1.0;
    double r_d = 0.0;
    // rho(m, m') = -sqrt(Gamma_m Gamma_m') / Gamma_total, power-normalised.
    Eigen::MatrixXd rho;
    // max |S S^dagger - I| of the two-sided matrix I - (2/Gamma_total) v v^dagger.
    double unitarity_deviation = 0.0;

    int diffraction_count() const { return static_cast<int>(channels.size()) - 1; }
};

// Uses the in-plane lattice of `spec`; layer count and shifts are ignored.
LayerChannels layer_channel_matrix(const StackSpec& spec);

struct InfiniteStackResult {
    cplx r{0.0, 0.0};
    // The bounce series had a unit-modulus round trip (two perfect mirrors);
    // r is then the lossless limit.
    bool degenerate = false;
};

// Order-0 reflection of two infinite layers from the channel-space
// Fabry-Perot sum. Requires n_z == 2.
InfiniteStackResult infinite_stack_reflectivity(const StackSpec& spec);

enum class ShiftPhase {
    per_bounce,  // e^{+iQ.b1} exciting layer B, e^{-iQ.b1} on its emission
    folded,      // e^{iQ.b1} folded into layer B's diffraction amplitude only
};

enum class Splitting {
    per_order,  // -Gamma_m / Gamma_total for each direction
    equal,      // r_d / n_d for every direction
};

enum class Injection {
    central_ray,  // one unit ray at the grid centre
    beam,         // Gaussian input resolved into rays over sub-grid offsets
};

struct RayOptions {
    ShiftPhase shift_phase = ShiftPhase::per_bounce;
    Splitting splitting = Splitting::per_order;
    Injection injection = Injection::central_ray;
    // Sub-grid offsets per ray-cell side for Injection::beam.
    int beam_offsets = 6;
    // Periodic box instead of clipping (rays leaving one edge re-enter).
    bool wrap = false;
    // Box side; default is the equal-area size a sqrt(N sin psi).
    std::optional<double> box;
    int max_points = 60000;
    bool store_scattering = false;  // keep the dense M x M matrix S
};

struct RayGrid {
    std::vector<Vec2> points;  // relative to the beam axis
    int center = 0;
    double box = 0.0;
    std::vector<Vec2> displacements;  // a_z tan(theta_d) Q_m/|Q_m| per radiative order
    // Single-layer ray-scattering matrices with hop phases: A -> B and B -> A.
    Eigen::SparseMatrix<cplx> s_r_ab;
    Eigen::SparseMatrix<cplx> s_r_ba;
    std::optional<Eigen::MatrixXcd> s;
    Eigen::VectorXcd a_in;
    Eigen::VectorXcd a;

    int size() const { return static_cast<int>(points.size()); }
};

struct RayResult {
    cplx r{0.0, 0.0};
    double r0 = 0.0;
    RayGrid grid;
};

// Points reachable from the centre by the diffraction displacements, kept
// inside the box (or wrapped onto it). Throws GridTooLargeError.
RayGrid build_ray_grid(const StackSpec& spec, const RayOptions& options = {});

// Gaussian-weighted order-0 reflection of a finite two-layer array. `waist`
// may be infinite (uniform weights).
RayResult finite_ray_reflectivity(const StackSpec& spec, double waist, const RayOptions& options = {});

// Predicted ray count (L / (a_z tan theta_d))^2 for the first shell.
double expected_ray_count(const StackSpec& spec);

struct ScalingFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    std::vector<double> residuals;  // log-space
    double rms_residual = 0.0;
    int points = 0;
};

// Least-squares fit of log(y) = log(c) + p log(N) over the points with
// N >= n_min. Throws InsufficientPointsError below `min_points`.
ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& series, double n_min,
                       int min_points = 4);

}  // namespace superwave
