#include "superwave/greens.hpp"

#include <cmath>

#include "superwave/errors.hpp"

namespace superwave {

cplx greens_coupling_unchecked(double dx, double dy, double dz) {
    const double r2 = dx * dx + dy * dy + dz * dz;
    const double r = std::sqrt(r2);
    const double kr = kWavenumber * r;
    const double inv = 1.0 / kr;
    // |r_hat . e|^2 for e = (x +/- i y)/sqrt(2).
    const double s = 0.5 * (dx * dx + dy * dy) / r2;
    const double c = std::cos(kr);
    const double sn = std::sin(kr);
    const double far = 1.0 - s;
    const double near = 1.0 - 3.0 * s;
    // bracket = far + near (i/kr - 1/kr^2)
    const double br = far - near * inv * inv;
    const double bi = near * inv;
    const double pref = 0.75 * inv;
    return {pref * (c * br - sn * bi), pref * (c * bi + sn * br)};
}

cplx greens_coupling(Vec3 r, Handedness) {
    if (r.x == 0.0 && r.y == 0.0 && r.z == 0.0)
        throw ValidationError("greens_coupling: zero separation");
    return greens_coupling_unchecked(r.x, r.y, r.z);
}

void BeamSpec::validate() const {
    if (!(waist > 0.0)) throw ValidationError("beam waist must be positive");
}

BeamSpec BeamSpec::reversed() const {
    BeamSpec b = *this;
    b.direction = direction == Direction::forward ? Direction::backward : Direction::forward;
    return b;
}

cplx gaussian_mode_field(const BeamSpec& beam, Vec3 point) {
    const double sign = static_cast<double>(static_cast<int>(beam.direction));
    const double zeta = sign * (point.z - beam.focus.z);
    const double dx = point.x - beam.focus.x;
    const double dy = point.y - beam.focus.y;
    const double rho2 = dx * dx + dy * dy;
    const double zr = beam.rayleigh_range();
    const double ratio = zeta / zr;
    const double w2 = beam.waist * beam.waist * (1.0 + ratio * ratio);
    const double amplitude = std::sqrt(1.0 / (1.0 + ratio * ratio)) * std::exp(-rho2 / w2);
    const double curvature = zeta / (zeta * zeta + zr * zr);
    const double phase = kWavenumber * zeta + 0.5 * kWavenumber * rho2 * curvature - std::atan(ratio);
    return std::polar(amplitude, phase);
}

}  // namespace superwave
