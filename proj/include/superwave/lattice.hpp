#pragma once

// Multilayer Bravais lattices and their diffraction orders.
//
// Units throughout the library: lengths in wavelengths (k = 2*pi), rates and
// detunings in units of the single-atom decay rate.

#include <complex>
#include <numbers>
#include <optional>
#include <vector>

namespace superwave {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kWavenumber = 2.0 * kPi;
inline constexpr cplx kI{0.0, 1.0};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

enum class Lattice { square, triangular };

// Circular dipole orientation e = (x +/- i y)/sqrt(2). Every quantity the
// library computes depends on |Q.e|^2 or |r.e|^2 only, which are the same for
// both handedness values; the field is carried for bookkeeping.
enum class Handedness { plus, minus };

// Rhombus: n1, n2 in 1..n_side. Circle: the n_side^2 lattice points closest
// to the patch centre (ties broken by lattice index).
enum class PatchShape { rhombus, circle };

double lattice_angle(Lattice lattice);

struct StackSpec {
    double psi = kPi / 2.0;
    double a = 1.0;
    double a_z = 1.0;
    int n_side = 1;
    int n_z = 1;
    std::vector<Vec2> shifts{Vec2{}};
    Handedness polarization = Handedness::plus;
    PatchShape patch = PatchShape::rhombus;

    // Throws ValidationError.
    void validate() const;

    bool superwavelength() const { return a > 1.0; }
    int atoms_per_layer() const { return n_side * n_side; }
    int total_atoms() const { return atoms_per_layer() * n_z; }
    double cell_area() const;
    // Equal-area linear size a*sqrt(N sin psi).
    double linear_size() const;
    // Zeroth-order collective rate (3/4pi) / (a^2 sin psi).
    double gamma0() const;

    Vec2 primitive1() const { return {a, 0.0}; }
    Vec2 primitive2() const;
};

// Stack with unshifted layers.
StackSpec make_stack(Lattice lattice, double a, double a_z, int n_side, int n_z);

// Two layers; when `shifted`, layer 1 is offset by half of (a1 + a2), which is
// (a/2, a/2) for the square lattice.
StackSpec make_bilayer(Lattice lattice, double a, double a_z, int n_side, bool shifted);

// The four half-lattice-vector offsets {0, a1/2, a2/2, (a1+a2)/2}; together the
// layers form a lattice of spacing a/2.
std::vector<Vec2> quarter_cell_shifts(Lattice lattice, double a);

// Layer-major, then (n1, n2) row-major with n1 outermost.
std::vector<Vec3> build_positions(const StackSpec& spec);

// Transverse centroid of the layer-0 patch plus the mean layer shift.
Vec2 patch_center(const StackSpec& spec);

struct DiffractionOrder {
    int m1 = 0;
    int m2 = 0;
    Vec2 q;              // transverse reciprocal vector, absolute units
    double q_ratio = 0;  // |Q|/k
    // sqrt(1 - q_ratio^2) when radiative; sqrt(q_ratio^2 - 1) otherwise.
    double kz_ratio = 0;
    // Radiative: the coupling rate Gamma_m. Evanescent: the real coefficient
    // c with Gamma_m = -i c (kz = i |kz|).
    double gamma_m = 0;
    bool radiative = false;
    std::optional<double> theta_d;  // arcsin(q_ratio), radiative only

    bool is_zero() const { return m1 == 0 && m2 == 0; }
    // kz in absolute units: real for radiative, imaginary otherwise.
    cplx kz() const;
    // Gamma_m as a complex number (pure imaginary for evanescent orders).
    cplx gamma() const;
};

// Smallest window half-width guaranteed to contain every radiative order.
int minimum_order_window(const StackSpec& spec);

// Orders with |m1|,|m2| <= m_max, sorted by q_ratio then (m1, m2).
// Throws WindowTooSmallError when m_max < minimum_order_window(spec).
std::vector<DiffractionOrder> enumerate_orders(const StackSpec& spec, int m_max);

// Radiative orders only, zeroth order first.
std::vector<DiffractionOrder> radiative_orders(const StackSpec& spec);

// Groups of radiative non-zero orders sharing q_ratio, ascending.
std::vector<std::vector<DiffractionOrder>> radiative_shells(const StackSpec& spec);

// |Q|/k of the first non-zero shell times a: 1 (square), 2/sqrt(3) (triangular).
double first_shell_factor(Lattice lattice);

// Lattice spacings bounding the single-shell and two-shell windows.
struct ShellWindow {
    double lower;
    double upper;
};
ShellWindow single_shell_window(Lattice lattice);
ShellWindow two_shell_window(Lattice lattice);

Lattice lattice_of(const StackSpec& spec);

}  // namespace superwave
