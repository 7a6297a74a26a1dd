#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "superwave/errors.hpp"
#include "superwave/interface_model.hpp"

using namespace superwave;
using doctest::Approx;

namespace {

const double kSquareA = std::sqrt(1.8);                       // (1 + 2/3) 3 = 5
const double kTriangularA = 2.0 / (0.6 * std::sqrt(3.0));     // kz = 0.8
const double kSquare4A = 17.0 / std::sqrt(120.0);             // (8.5, 1.55) design
const double kTriangular4A = 13.0 / 6.0;                      // (6.5, 2.17) design

}  // namespace

TEST_CASE("subwavelength interlayer kernel is a single propagating term") {
    const StackSpec s = make_stack(Lattice::square, 0.8, 3.0, 1, 2);
    const cplx d = interlayer_kernel(s, 0, 1, 6).value;
    const cplx expect = 0.5 * s.gamma0() * std::exp(kI * kWavenumber * 3.0);
    CHECK(std::abs(d - expect) < 1e-6 * s.gamma0());
}

TEST_CASE("radiative kernel of the shifted square bilayer") {
    const StackSpec s = make_bilayer(Lattice::square, kSquareA, 3.0, 1, true);
    const cplx d = interlayer_kernel(s, 0, 1, 4, KernelPart::radiative).value;
    CHECK(d.real() / s.gamma0() == Approx(0.5 - 13.0 / 6.0).epsilon(1e-12));
    CHECK(std::abs(d.imag()) < 1e-12);
}

TEST_CASE("kernel symmetry and on-site divergence") {
    const StackSpec s = make_stack(Lattice::triangular, 1.6, 2.2, 1, 3);
    const cplx d01 = interlayer_kernel(s, 0, 1, 8).value;
    const cplx d10 = interlayer_kernel(s, 1, 0, 8).value;
    CHECK(std::abs(d01 - d10) < 1e-14);
    CHECK_THROWS_AS(interlayer_kernel(s, 1, 1, 8), DivergentKernelError);
    CHECK_NOTHROW(interlayer_kernel(s, 1, 1, 8, KernelPart::radiative));
}

TEST_CASE("exact cancellation at the resonant configurations") {
    SUBCASE("shifted square (3, sqrt 1.8)") {
        const StackSpec s = make_bilayer(Lattice::square, kSquareA, 3.0, 1, true);
        const auto p = two_layer_params(s);
        CHECK(std::abs(p.gamma_diff) < 1e-10 * s.gamma0());
        CHECK(p.r0 == Approx(1.0).epsilon(1e-12));
        CHECK(p.gamma_target == Approx(2.0 * s.gamma0()));
    }
    SUBCASE("unshifted triangular (2.5, 1.9245)") {
        const StackSpec s = make_bilayer(Lattice::triangular, kTriangularA, 2.5, 1, false);
        CHECK(std::abs(two_layer_params(s).gamma_diff) < 1e-10 * s.gamma0());
    }
    SUBCASE("subwavelength at half-integer spacing") {
        for (double a_z : {0.5, 1.0, 2.5}) {
            const StackSpec s = make_bilayer(Lattice::square, 0.8, a_z, 1, false);
            const auto p = two_layer_params(s);
            CHECK(std::abs(p.gamma_diff) < 1e-12);
            CHECK(p.r0 == 1.0);
        }
    }
}

TEST_CASE("rounded spacings are close to, not at, the resonance") {
    const StackSpec s = make_bilayer(Lattice::square, 1.3416, 3.0, 1, true);
    const auto p = two_layer_params(s);
    CHECK(p.gamma_diff.real() > 0.0);
    CHECK(p.r0 > 0.9999);
    const auto snap = snap_to_resonance(Lattice::square, true, 3.0, 1.3416);
    CHECK(snap.n == 5);
    CHECK(snap.a == Approx(kSquareA).epsilon(1e-14));
    CHECK(snap_to_resonance(Lattice::triangular, false, 2.5, 1.925).a == Approx(kTriangularA).epsilon(1e-14));
}

TEST_CASE("two-order configuration (4.5, 1.58)") {
    const StackSpec s = make_bilayer(Lattice::square, 1.58, 4.5, 1, true);
    const auto p = two_layer_params(s);
    CHECK(p.gamma_diff.real() > 0.0);
    CHECK(p.r0 > 0.98);
    CHECK(std::abs((1 + 0.7742) * 4.5 - 8) < 0.02);
    const auto res = shell_phase_residues(s);
    REQUIRE(res.size() == 2);
    CHECK(res[0] < 0.02);
    CHECK(res[1] < 0.02);
}

TEST_CASE("loss rate bounds and efficiency range") {
    for (double a : {1.05, 1.2, 1.35, 1.5, 1.7, 1.95})
        for (double a_z : {0.9, 1.7, 2.5, 3.3})
            for (bool shifted : {false, true}) {
                const StackSpec s = make_bilayer(Lattice::square, a, a_z, 1, shifted);
                const auto p = two_layer_params(s);
                double bound = 0.0;
                for (const auto& o : radiative_orders(s))
                    if (!o.is_zero()) bound += 2.0 * o.gamma_m;
                CHECK(p.gamma_diff.real() >= -1e-12);
                CHECK(p.gamma_diff.real() <= bound + 1e-12);
                CHECK(p.r0 >= 0.0);
                CHECK(p.r0 <= 1.0);
            }
}

TEST_CASE("loss rate is invariant under point-group rotations of the shift") {
    StackSpec s = make_bilayer(Lattice::square, 1.3, 2.2, 1, false);
    s.shifts[1] = {0.31, 0.12};
    const cplx g = two_layer_params(s).gamma_diff;
    s.shifts[1] = {-0.12, 0.31};
    CHECK(std::abs(two_layer_params(s).gamma_diff - g) < 1e-13);

    StackSpec t = make_bilayer(Lattice::triangular, 1.7, 2.2, 1, false);
    const Vec2 b{0.31, 0.12};
    t.shifts[1] = b;
    const cplx gt = two_layer_params(t).gamma_diff;
    const double c = std::cos(kPi / 3.0), sn = std::sin(kPi / 3.0);
    t.shifts[1] = {c * b.x - sn * b.y, sn * b.x + c * b.y};
    CHECK(std::abs(two_layer_params(t).gamma_diff - gt) < 1e-13);
}

TEST_CASE("two-layer multilayer projection matches two_layer_params") {
    for (double a : {1.1, 1.3, 1.6})
        for (bool shifted : {false, true}) {
            const StackSpec s = make_bilayer(Lattice::square, a, 2.5, 1, shifted);
            const auto p = two_layer_params(s);
            const auto m = multilayer_params(s, 6, KernelPart::radiative);
            CHECK(std::abs(m.params.gamma_diff - p.gamma_diff) < 1e-12);
            CHECK(m.params.gamma_target == Approx(p.gamma_target).epsilon(1e-12));
            CHECK(m.eigen_residual < 1e-12);
        }
}

TEST_CASE("four-layer square design (8.5, 17/sqrt 120)") {
    StackSpec s = make_stack(Lattice::square, kSquare4A, 8.5, 1, 4);
    s.shifts = quarter_cell_shifts(Lattice::square, kSquare4A);
    const auto m = multilayer_params(s, 8);
    CHECK(std::abs(m.params.gamma_diff.real()) < 1e-10 * s.gamma0());
    CHECK(m.eigen_residual < 1e-10);
}

TEST_CASE("four-layer triangular design (6.5, 13/6)") {
    StackSpec s = make_stack(Lattice::triangular, kTriangular4A, 6.5, 1, 4);
    s.shifts = quarter_cell_shifts(Lattice::triangular, kTriangular4A);
    // Radiative orders alone cancel exactly; near-field coupling of adjacent
    // layers through the third shell leaves a small residual.
    const auto rad = multilayer_params(s, 8, KernelPart::radiative);
    CHECK(std::abs(rad.params.gamma_diff) < 1e-10 * s.gamma0());
    CHECK(rad.eigen_residual < 1e-12);
    const auto full = multilayer_params(s, 8, KernelPart::full, 1e-6);
    CHECK(std::abs(full.params.gamma_diff.real()) < 1e-10 * s.gamma0());
    CHECK(full.eigen_residual == Approx(2.95e-8).epsilon(0.02));
    CHECK_THROWS_AS(multilayer_params(s, 8, KernelPart::full, 1e-10), NotAnEigenmodeError);
}

TEST_CASE("multilayer projection needs half-integer spacing") {
    StackSpec s = make_stack(Lattice::square, 1.2, 2.3, 1, 4);
    CHECK_THROWS_AS(multilayer_params(s, 6), ValidationError);
}

TEST_CASE("resonant curves through the published configurations") {
    CHECK(resonant_interlayer_spacing(Lattice::square, true, 5, kSquareA) == Approx(3.0).epsilon(1e-14));
    CHECK(resonant_interlayer_spacing(Lattice::triangular, false, 4, kTriangularA) == Approx(2.5).epsilon(1e-14));
    CHECK(*resonant_lattice_spacing(Lattice::square, true, 5, 3.0) == Approx(kSquareA).epsilon(1e-14));
    CHECK_FALSE(resonant_lattice_spacing(Lattice::square, true, 1, 3.0).has_value());
    CHECK_THROWS_AS(branch_for(Lattice::triangular, true), ValidationError);
}

TEST_CASE("every curve point cancels the loss") {
    for (bool shifted : {false, true}) {
        const auto curves = resonant_spacing_curves(Lattice::square, shifted, 1.02, 1.41, 0, 8, 40);
        CHECK(!curves.empty());
        for (const auto& c : curves)
            for (const auto& [a_z, a] : c.points) {
                const StackSpec s = make_bilayer(Lattice::square, a, a_z, 1, shifted);
                CHECK(std::abs(two_layer_params(s).gamma_diff) < 1e-10 * s.gamma0());
            }
    }
    const auto tri = resonant_spacing_curves(Lattice::triangular, false, 1.2, 1.99, 0, 6, 25);
    for (const auto& c : tri)
        for (const auto& [a_z, a] : c.points) {
            const StackSpec s = make_bilayer(Lattice::triangular, a, a_z, 1, false);
            CHECK(std::abs(two_layer_params(s).gamma_diff) < 1e-10 * s.gamma0());
        }
    CHECK_THROWS_AS(resonant_spacing_curves(Lattice::square, false, 0.9, 1.2, 0, 3, 10), ValidationError);
}

TEST_CASE("multi-order scan") {
    std::vector<double> a;
    for (int i = 1; i < 586; ++i) a.push_back(std::sqrt(2.0) + (2.0 - std::sqrt(2.0)) * i / 586.0);
    auto best = [&](double a_z) {
        const auto rows = multiorder_scan(Lattice::square, true, a, {a_z});
        return *std::min_element(rows.begin(), rows.end(),
                                 [](const ScanRow& x, const ScanRow& y) { return x.r0 > y.r0; });
    };
    const ScanRow at45 = best(4.5);
    CHECK(at45.a == Approx(1.58).epsilon(0.01 / 1.58));
    CHECK(1.0 - at45.r0 <= 1.0 - best(2.5).r0);
    REQUIRE(at45.shell_residues.size() == 2);
    CHECK(at45.shell_residues[0] < 0.05);
    CHECK(at45.shell_residues[1] < 0.05);

    const double below = std::sqrt(2.0) - 1e-4;
    const auto row = multiorder_scan(Lattice::square, true, {below}, {2.7}).front();
    const auto p = two_layer_params(make_bilayer(Lattice::square, below, 2.7, 1, true));
    CHECK(row.r0 == p.r0);
    CHECK(row.shell_residues.size() == 1);
}

TEST_CASE("four-layer design search") {
    const ShellWindow sq = two_shell_window(Lattice::square);
    const auto square = design_multilayer_shifts(Lattice::square, sq.lower, sq.upper, 10.0);
    auto has = [](const std::vector<MultilayerDesign>& ds, double a_z, double a) {
        return std::any_of(ds.begin(), ds.end(), [&](const MultilayerDesign& d) {
            return d.a_z == a_z && std::abs(d.a - a) < 5e-3;
        });
    };
    CHECK(has(square, 8.5, 1.55));
    for (const auto& d : square) {
        CHECK(d.shifts.size() == 4);
        CHECK(std::abs(d.gamma_diff.real()) < 1e-8);
    }
    const ShellWindow tr = two_shell_window(Lattice::triangular);
    const auto tri = design_multilayer_shifts(Lattice::triangular, tr.lower, tr.upper, 10.0);
    CHECK(has(tri, 6.5, 2.17));
    CHECK(design_multilayer_shifts(Lattice::square, sq.lower, sq.upper, 2.0).empty());
    CHECK(design_multilayer_shifts(Lattice::triangular, tr.lower, tr.upper, 2.0).empty());
}
