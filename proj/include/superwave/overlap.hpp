#pragma once

// Projection of the scattered field onto the Gaussian target mode on finite
// detection planes.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "superwave/greens.hpp"
#include "superwave/lattice.hpp"

namespace superwave {

enum class OverlapMethod {
    automatic,  // tabulated when the atoms sit on a grid-aligned lattice
    direct,     // sum the dipole fields point by point
    tabulated,  // lattice-aligned grid, kernel evaluated once per offset
};

struct OverlapOptions {
    double aperture_factor = 8.0;  // aperture side / waist, >= 8
    double step = 0.25;            // grid step, <= 0.25
    double min_plane_distance = 5.0;
    bool transmission = true;
    OverlapMethod method = OverlapMethod::automatic;

    // Throws OverlapContractError.
    void validate() const;
};

// Detection grid commensurate with the atomic lattice: every atom sits at
// origin + (i hx, j hy) for integers i, j.
struct GridAlignment {
    Vec2 origin;
    double hx = 0.25;
    double hy = 0.25;
};

// Steps a/kx and a sin(psi)/ky with kx, ky multiples of four, the largest
// not exceeding `step`.
GridAlignment lattice_alignment(const StackSpec& spec, double step);

// Precomputes, for each atom j, the normalised overlap of its dipole field
// with the time-reversed input mode on the reflection plane (and the input
// mode itself on the transmission plane). The reflection amplitude is then
// r = sum_j w_j p_j, independent of the drive normalisation.
//
// Reflection plane: distance max(min_plane_distance, z_R/2) before the first
// layer the beam meets; transmission plane: the same distance past the last.
class ModeProjector {
public:
    ModeProjector(const std::vector<Vec3>& positions, const BeamSpec& beam,
                  const OverlapOptions& options = {},
                  std::optional<GridAlignment> alignment = std::nullopt);

    cplx reflection(const Eigen::VectorXcd& dipoles) const;
    // Includes the incident mode (exactly 1 on the discrete grid).
    std::optional<cplx> transmission(const Eigen::VectorXcd& dipoles) const;

    const Eigen::VectorXcd& reflection_weights() const { return reflect_; }
    double reflection_plane() const { return z_reflect_; }
    double transmission_plane() const { return z_transmit_; }
    bool used_tabulation() const { return tabulated_; }
    int grid_points() const { return grid_points_; }

private:
    Eigen::VectorXcd reflect_;
    std::optional<Eigen::VectorXcd> transmit_;
    double z_reflect_ = 0.0;
    double z_transmit_ = 0.0;
    bool tabulated_ = false;
    int grid_points_ = 0;
};

}  // namespace superwave
