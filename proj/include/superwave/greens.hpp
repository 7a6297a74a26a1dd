#pragma once

#include "superwave/lattice.hpp"

namespace superwave {

// e* . G(r) . e for the circular dipole orientation, in units of the
// single-atom decay rate:
//   G = (3/4) e^{ikr}/(kr) [ (1 - rr) + (1 - 3 rr)(i/(kr) - 1/(kr)^2) ].
// Throws ValidationError for r = 0.
cplx greens_coupling(Vec3 r, Handedness polarization = Handedness::plus);

// Same kernel without the zero check, for inner loops that guarantee r != 0.
cplx greens_coupling_unchecked(double dx, double dy, double dz);

enum class Direction { forward = 1, backward = -1 };

struct BeamSpec {
    double waist = 1.0;  // amplitude profile exp(-rho^2 / waist^2) at focus
    Vec3 focus{};
    Direction direction = Direction::forward;

    void validate() const;
    // Below two wavelengths the paraxial form is only indicative.
    bool paraxial_advisory() const { return waist < 2.0; }
    double rayleigh_range() const { return kPi * waist * waist; }
    // Copy travelling the other way through the same focus.
    BeamSpec reversed() const;
};

// Paraxial Gaussian mode with unit peak amplitude at focus, including the
// Gouy phase and wavefront curvature.
cplx gaussian_mode_field(const BeamSpec& beam, Vec3 point);

}  // namespace superwave
