#include <doctest.h>

#include <cmath>
#include <random>

#include "superwave/dipole_solver.hpp"
#include "superwave/errors.hpp"
#include "superwave/greens.hpp"
#include "superwave/shifted_solver.hpp"

using namespace superwave;
using doctest::Approx;

TEST_CASE("Green's coupling along the axis") {
    for (double r : {0.3, 1.0, 2.7}) {
        const double kr = kWavenumber * r;
        const cplx expect = 0.75 * std::exp(kI * kr) / kr * (1.0 + kI / kr - 1.0 / (kr * kr));
        CHECK(std::abs(greens_coupling({0, 0, r}) - expect) < 1e-14);
    }
}

TEST_CASE("Green's coupling is even and decays to the far-field form") {
    const Vec3 r{0.37, -1.2, 0.8};
    CHECK(std::abs(greens_coupling(r) - greens_coupling({-r.x, -r.y, -r.z})) < 1e-15);
    CHECK(std::abs(greens_coupling(r, Handedness::plus) - greens_coupling(r, Handedness::minus)) < 1e-15);
    const double z = 1000.0;
    const double kr = kWavenumber * z;
    const cplx far = 0.75 * std::exp(kI * kr) / kr;
    CHECK(std::abs(greens_coupling({0, 0, z}) - far) < 1e-3 * std::abs(far));
    CHECK_THROWS_AS(greens_coupling({0, 0, 0}), ValidationError);
}

TEST_CASE("Gaussian mode normalisation") {
    BeamSpec b;
    b.waist = 4.0;
    b.focus = {1.0, 2.0, 3.0};
    CHECK(std::abs(gaussian_mode_field(b, b.focus)) == Approx(1.0));
    CHECK(std::abs(gaussian_mode_field(b, {5.0, 2.0, 3.0})) == Approx(std::exp(-1.0)));
    CHECK(std::abs(gaussian_mode_field(b, {1.0, 2.0, 3.0 + b.rayleigh_range()})) == Approx(1.0 / std::sqrt(2.0)));
    CHECK(b.rayleigh_range() == Approx(kPi * 16.0));
    b.waist = 1.0;
    CHECK(b.paraxial_advisory());
    b.waist = -1.0;
    CHECK_THROWS_AS(b.validate(), ValidationError);
}

TEST_CASE("shifted Hessenberg solves match dense LU") {
    std::mt19937 rng(7);
    std::normal_distribution<double> n;
    const int size = 40;
    Eigen::MatrixXcd a(size, size);
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) a(i, j) = {n(rng), n(rng)};
    Eigen::VectorXcd b(size);
    for (int i = 0; i < size; ++i) b(i) = {n(rng), n(rng)};
    const ShiftedSolver solver(a);
    for (cplx s : {cplx{0.0, 0.0}, cplx{0.3, -1.2}, cplx{-2.0, 0.5}}) {
        const Eigen::MatrixXcd m = a + s * Eigen::MatrixXcd::Identity(size, size);
        const Eigen::VectorXcd x = solver.solve(s, b);
        CHECK((m * x - b).norm() / b.norm() < 1e-12);
    }
}

TEST_CASE("single atom responds with p = 2i Omega") {
    const StackSpec s = make_stack(Lattice::square, 1.0, 1.0, 1, 1);
    const BeamSpec beam = default_beam(s, 3.0);
    const DipoleProblem prob = assemble_and_solve(s, 0.0, beam);
    REQUIRE(prob.solution.size() == 1);
    CHECK(std::abs(prob.solution(0) / prob.drive(0) - cplx(0.0, 2.0)) < 1e-14);
    CHECK(prob.residual < 1e-14);
}

TEST_CASE("distant atoms are independent") {
    const DipoleSystem sys({{0, 0, 0}, {1000.0, 0, 0}}, false);
    const Eigen::VectorXcd drive = Eigen::VectorXcd::Ones(2);
    const Eigen::VectorXcd p = sys.solve_direct(0.0, drive);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(p(i) - cplx(0.0, 2.0)) < 1e-3);
}

TEST_CASE("direct and shifted solves agree with small residuals") {
    const StackSpec s = make_bilayer(Lattice::square, 1.2, 1.5, 6, true);
    const auto pos = build_positions(s);
    const DipoleSystem sys(pos, true);
    const Eigen::VectorXcd drive = beam_drive(pos, default_beam(s, 3.0));
    for (double d : {-0.4, 0.0, 0.25}) {
        const Eigen::VectorXcd p1 = sys.solve_direct(d, drive);
        const Eigen::VectorXcd p2 = sys.solve_shifted(d, drive);
        CHECK((p1 - p2).norm() / p1.norm() < 1e-11);
        CHECK(sys.residual(d, drive, p2) < 1e-10);
        const auto red = sys.reduce(drive);
        CHECK((sys.expand(sys.solve_reduced(d, red)) - p2).norm() / p2.norm() < 1e-12);
    }
    CHECK(sys.interaction().isApprox(sys.interaction().transpose()));
}

TEST_CASE("memory budget is enforced") {
    SolverOptions o;
    o.memory_budget_bytes = 1000;
    CHECK_THROWS_AS(DipoleSystem(build_positions(make_stack(Lattice::square, 1.0, 1.0, 4, 1)), true, o),
                    MemoryBudgetError);
    CHECK(solver_memory_estimate(1000, true) == 2 * solver_memory_estimate(1000, false));
}

TEST_CASE("zero dipoles reflect nothing") {
    const StackSpec s = make_stack(Lattice::square, 0.8, 1.0, 4, 1);
    DipoleProblem prob = assemble_and_solve(s, 0.0, default_beam(s, 1.0));
    prob.solution.setZero();
    const BeamSpec beam = default_beam(s, 1.0);
    CHECK(std::abs(reflectivity_overlap(prob, beam).r) == 0.0);
}

TEST_CASE("single atom resonance sits at zero detuning") {
    const StackSpec s = make_stack(Lattice::square, 1.0, 1.0, 1, 1);
    const auto res = find_resonance(s, default_beam(s, 2.0));
    CHECK(std::abs(res.delta_star) < 1e-6);
}

TEST_CASE("35x35 single layer at a = 1.3416") {
    const StackSpec s = make_stack(Lattice::square, 1.3416, 1.0, 35, 1);
    const auto res = find_resonance(s, default_beam(s, 0.3 * s.linear_size()));
    CHECK(std::abs(res.delta_star) < 3.0 * s.gamma0());
    CHECK(res.delta_star == Approx(-0.104451).epsilon(1e-4));
    CHECK(res.residual < 1e-10);
}

TEST_CASE("plane-wave linewidth of a subwavelength layer") {
    const StackSpec s = make_stack(Lattice::square, 0.8, 1.0, 10, 1);
    const auto pos = build_positions(s);
    const DipoleSystem sys(pos, true);
    const Eigen::VectorXcd drive = beam_drive(pos, default_beam(s, 1000.0));
    std::vector<double> d, v;
    for (int i = 0; i <= 4000; ++i) {
        d.push_back(-2.0 + 4.0 * i / 4000);
        v.push_back(std::norm(sys.solve_shifted(d.back(), drive).sum()));
    }
    int peak = 0;
    for (int i = 0; i < static_cast<int>(v.size()); ++i)
        if (v[i] > v[peak]) peak = i;
    int l = peak, r = peak;
    while (l > 0 && v[l] > v[peak] / 2) --l;
    while (r + 1 < static_cast<int>(v.size()) && v[r] > v[peak] / 2) ++r;
    const double fwhm = d[r] - d[l];
    CHECK(std::abs(fwhm / s.gamma0() - 1.0) < 0.15);
}

TEST_CASE("resonant bilayer: scan maximum, reciprocity, grid refinement") {
    const StackSpec s = make_bilayer(Lattice::square, std::sqrt(1.8), 3.0, 12, true);
    const double w = 0.3 * s.linear_size();
    const BeamSpec fwd = default_beam(s, w);
    const auto res = find_resonance(s, fwd);
    CHECK(res.residual < 1e-10);
    CHECK(res.r0 > 0.4);
    CHECK(res.r0 <= 1.0);

    const auto pos = build_positions(s);
    const DipoleSystem sys(pos, true);
    const ModeProjector proj(pos, fwd, {}, lattice_alignment(s, 0.25));
    const ResonanceScanner scan(sys, beam_drive(pos, fwd), proj);
    CHECK(res.r0 >= std::abs(scan.reflection(0.0)));
    CHECK(std::abs(scan.reflection(res.delta_star)) == Approx(res.r0).epsilon(1e-10));
    const auto at = scan.evaluate(res.delta_star);
    REQUIRE(at.t.has_value());
    CHECK(std::norm(at.r) + std::norm(*at.t) <= 1.0 + 1e-2);
    CHECK(*at.power_balance >= -1e-2);

    const BeamSpec bwd = fwd.reversed();
    const ModeProjector proj_b(pos, bwd, {}, lattice_alignment(s, 0.25));
    const ResonanceScanner scan_b(sys, beam_drive(pos, bwd), proj_b);
    CHECK(std::abs(std::abs(scan_b.reflection(res.delta_star)) - res.r0) < 1e-6);

    OverlapOptions fine;
    fine.step = 0.125;
    const ModeProjector proj_f(pos, fwd, fine, lattice_alignment(s, 0.125));
    const ResonanceScanner scan_f(sys, beam_drive(pos, fwd), proj_f);
    const cplx r1 = scan.reflection(res.delta_star);
    const cplx r2 = scan_f.reflection(res.delta_star);
    CHECK(std::abs(r2 - r1) < 1e-3 * std::abs(r1));

    OverlapOptions direct;
    direct.method = OverlapMethod::direct;
    const ModeProjector proj_d(pos, fwd, direct);
    CHECK_FALSE(proj_d.used_tabulation());
    CHECK(proj.used_tabulation());
    const ResonanceScanner scan_d(sys, beam_drive(pos, fwd), proj_d);
    CHECK(std::abs(scan_d.reflection(res.delta_star) - r1) < 1e-8);
}

TEST_CASE("an edge maximum is reported, not returned") {
    const StackSpec s = make_bilayer(Lattice::square, std::sqrt(1.8), 3.0, 6, true);
    const BeamSpec beam = default_beam(s, 0.3 * s.linear_size());
    ResonanceSetup setup;
    setup.window = DetuningWindow{2.0, 3.0};
    CHECK_THROWS_AS(find_resonance(s, beam, setup), ResonanceNotBracketedError);
}

TEST_CASE("overlap contract") {
    OverlapOptions o;
    o.aperture_factor = 4.0;
    CHECK_THROWS_AS(o.validate(), OverlapContractError);
    o = {};
    o.step = 0.5;
    CHECK_THROWS_AS(o.validate(), OverlapContractError);
}

TEST_CASE("map rows follow the input grids") {
    MapOptions o;
    const auto rows = reflectivity_map_numeric(Lattice::square, false, {1.1, 1.2}, {1.5, 2.0}, 5,
                                               WaistRule{WaistRule::Kind::relative, 0.3}, o);
    REQUIRE(rows.size() == 4);
    CHECK(rows[1].a_z == 1.5);
    CHECK(rows[1].a == 1.2);
    CHECK(rows[2].a_z == 2.0);
    for (const auto& r : rows) {
        CHECK(r.ok);
        CHECK(r.residual < 1e-10);
    }
    CHECK_THROWS_AS(reflectivity_map_numeric(Lattice::square, false, {}, {1.0}, 5, WaistRule{}, o),
                    ValidationError);
}
