#include "superwave/harness.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

#include "superwave/csv.hpp"
#include "superwave/errors.hpp"
#include "superwave/interface_model.hpp"
#include "superwave/sweep.hpp"

namespace superwave {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lattice_name(Lattice l) { return l == Lattice::square ? "square" : "triangular"; }

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int side_of(int n) { return static_cast<int>(std::lround(std::sqrt(static_cast<double>(n)))); }

StackSpec stack_for(const JobConfig& c, Lattice lattice, double a, double a_z, int n) {
    if (c.snap_resonance && c.n_z == 2) a = snap_to_resonance(lattice, c.shifted, a_z, a).a;
    StackSpec s;
    if (c.n_z == 2) {
        s = make_bilayer(lattice, a, a_z, side_of(n), c.shifted);
    } else {
        s = make_stack(lattice, a, a_z, side_of(n), c.n_z);
        if (c.shifted) s.shifts = quarter_cell_shifts(lattice, a);
    }
    s.patch = c.patch;
    s.validate();
    return s;
}

MapOptions dipole_options(const JobConfig& c) {
    MapOptions o;
    o.setup.solver.residual_tolerance = c.residual_tolerance;
    return o;
}

RayOptions ray_options(const JobConfig& c) {
    RayOptions o;
    o.shift_phase = c.shift_phase;
    o.splitting = c.splitting;
    return o;
}

// Accumulates tables, runtimes and failures for one job.
struct Collector {
    std::vector<std::pair<std::string, CsvTable>> tables;
    json runtimes = json::object();
    json failures = json::array();
    json extra = json::object();
    int failure_count = 0;
    std::ostream* log = nullptr;

    template <class R>
    void record(const std::string& backend, const std::vector<SweepOutcome<R>>& outcomes,
                const std::function<json(std::size_t)>& point) {
        json times = json::array();
        int failed = 0;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            times.push_back(outcomes[i].seconds);
            if (!outcomes[i].ok()) {
                failures.push_back({{"backend", backend}, {"point", point(i)}, {"reason", outcomes[i].error}});
                ++failed;
            }
        }
        runtimes[backend] = times;
        failure_count += failed;
        if (log)
            *log << "  " << backend << ": " << outcomes.size() - failed << "/" << outcomes.size()
                 << " points ok\n";
    }

    void job_failure(const std::string& backend, const std::string& what, const std::string& reason) {
        failures.push_back({{"backend", backend}, {"point", what}, {"reason", reason}});
        ++failure_count;
    }
};

// Index of the grid value nearest to x, or -1 when x lies more than one
// spacing outside the grid.
int nearest_index(const std::vector<double>& grid, double x) {
    if (grid.size() == 1) return std::abs(x - grid[0]) < 1e-12 ? 0 : -1;
    const double lo_step = grid[1] - grid[0];
    const double hi_step = grid.back() - grid[grid.size() - 2];
    if (x < grid.front() - lo_step || x > grid.back() + hi_step) return -1;
    int best = 0;
    for (int i = 1; i < static_cast<int>(grid.size()); ++i)
        if (std::abs(grid[i] - x) < std::abs(grid[best] - x)) best = i;
    return best;
}

json ridge_json(const std::vector<Ridge>& ridges) {
    json list = json::array();
    int on = 0, worst = 0;
    for (const auto& r : ridges) {
        list.push_back({{"a", r.a}, {"a_z", r.a_z}, {"value", r.value}, {"cell_distance", r.cell_distance},
                        {"on_curve", r.on_curve}});
        on += r.on_curve;
        worst = std::max(worst, r.cell_distance);
    }
    return {{"maxima", ridges.size()}, {"on_curve", on}, {"max_cell_distance", worst}, {"ridges", list}};
}

std::vector<double> column_values(const std::vector<std::optional<double>>& v, std::vector<bool>& ok) {
    std::vector<double> out(v.size(), kNaN);
    ok.assign(v.size(), false);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] && std::isfinite(*v[i])) {
            out[i] = *v[i];
            ok[i] = true;
        }
    return out;
}

void run_map(const JobConfig& c, Collector& col, int jobs) {
    const Lattice lattice = c.lattices.front();
    const int n = c.n_values.front();
    const WaistRule waist{c.waist, c.w_values.front()};
    struct Pt {
        double a_z, a;
    };
    std::vector<Pt> pts;
    for (double a_z : c.a_z_values)
        for (double a : c.a_values) pts.push_back({a_z, a});
    auto point = [&](std::size_t i) { return json{{"a_z", pts[i].a_z}, {"a", pts[i].a}}; };
    json ridges = json::object();

    auto add_ridges = [&](const std::string& backend, const std::vector<std::optional<double>>& r0) {
        std::vector<bool> ok;
        const auto values = column_values(r0, ok);
        ridges[backend] = ridge_json(map_ridges(lattice, c.shifted, c.a_values, c.a_z_values, values, ok));
    };

    for (Backend b : c.effective_backends()) {
        const std::string name = to_string(b);
        std::vector<std::optional<double>> r0(pts.size());
        if (b == Backend::analytic) {
            const std::function<InterfaceParams(const Pt&)> f = [&](const Pt& p) {
                return two_layer_params(make_bilayer(lattice, p.a, p.a_z, 1, c.shifted));
            };
            const auto out = sweep_grid(pts, f, jobs);
            col.record(name, out, point);
            CsvTable t({"a_z", "a", "re_gamma_diff", "im_gamma_diff", "r0"});
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const auto& v = out[i].value;
                t.add_row({pts[i].a_z, pts[i].a, v ? v->gamma_diff.real() : kNaN,
                           v ? v->gamma_diff.imag() : kNaN, v ? v->r0 : kNaN});
                if (v) r0[i] = v->r0;
            }
            col.tables.emplace_back(name, std::move(t));
        } else if (b == Backend::dipole) {
            const MapOptions opts = dipole_options(c);
            const std::function<MapRow(const Pt&)> f = [&](const Pt& p) {
                return reflectivity_map_point(stack_for(c, lattice, p.a, p.a_z, n), waist, opts);
            };
            const auto out = sweep_grid(pts, f, jobs);
            col.record(name, out, point);
            CsvTable t({"a_z", "a", "delta_star", "r0", "t2", "residual"});
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const auto& v = out[i].value;
                if (v)
                    t.add_row({pts[i].a_z, pts[i].a, v->delta_star, v->r0, v->t2, v->residual});
                else
                    t.add_row({pts[i].a_z, pts[i].a, kNaN, kNaN, kNaN, kNaN});
                if (v) r0[i] = v->r0;
            }
            col.tables.emplace_back(name, std::move(t));
        } else {
            const std::function<InfiniteStackResult(const Pt&)> f = [&](const Pt& p) {
                return infinite_stack_reflectivity(make_bilayer(lattice, p.a, p.a_z, 1, c.shifted));
            };
            const auto out = sweep_grid(pts, f, jobs);
            col.record(name, out, point);
            CsvTable t({"a_z", "a", "r0", "reflectance", "re_r", "im_r", "degenerate"});
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const auto& v = out[i].value;
                if (v)
                    t.add_row({pts[i].a_z, pts[i].a, std::abs(v->r), std::norm(v->r), v->r.real(), v->r.imag(),
                               static_cast<long long>(v->degenerate)});
                else
                    t.add_row({pts[i].a_z, pts[i].a, kNaN, kNaN, kNaN, kNaN, 0LL});
                if (v) r0[i] = std::abs(v->r);
            }
            col.tables.emplace_back(name, std::move(t));
        }
        add_ridges(name, r0);
    }
    col.extra["ridges"] = ridges;

    // Analytic resonant curves over the map range.
    const ShellWindow win = single_shell_window(lattice);
    const double da = c.a_values.size() > 1 ? c.a_values[1] - c.a_values[0] : 0.0;
    const double lo = std::max(c.a_values.front() - da, win.lower + 1e-9);
    const double hi = std::min(c.a_values.back() + da, win.upper - 1e-9);
    CsvTable curves({"branch", "n", "a_z", "a"});
    if (lo < hi) {
        const double a_z_top = *std::max_element(c.a_z_values.begin(), c.a_z_values.end());
        const int n_max = static_cast<int>(std::ceil(2.0 * a_z_top)) + 2;
        for (const auto& cv : resonant_spacing_curves(lattice, c.shifted, lo, hi, 0, n_max, 200)) {
            for (const auto& [a_z, a] : cv.points) {
                if (a_z > a_z_top + 1.0) continue;
                curves.add_row({std::string(cv.branch == Branch::opposing ? "opposing" : "matched"),
                                static_cast<long long>(cv.n), a_z, a});
            }
        }
    }
    col.tables.emplace_back("curves", std::move(curves));
}

// Product grid used by scaling, resonance and ray jobs.
struct StackPoint {
    double a_z, a;
    int n;
    double w;
};

std::vector<StackPoint> stack_points(const JobConfig& c) {
    std::vector<StackPoint> pts;
    for (double a_z : c.a_z_values)
        for (double a : c.a_values)
            for (int n : c.n_values)
                for (double w : c.w_values) pts.push_back({a_z, a, n, w});
    return pts;
}

json stack_point_json(const StackPoint& p) { return {{"a_z", p.a_z}, {"a", p.a}, {"N", p.n}, {"w", p.w}}; }

// Leading columns: N, n_side, a, w for scaling tables, else a_z, a, N, n_side, w.
// `a` is the lattice spacing actually used (after snapping).
std::vector<CsvCell> point_cells(const StackPoint& p, double a, bool scaling) {
    const auto n = static_cast<long long>(p.n);
    const auto side = static_cast<long long>(side_of(p.n));
    if (scaling) return {n, side, a, p.w};
    return {p.a_z, a, n, side, p.w};
}

struct DipolePoint {
    StackSpec spec;
    MapRow row;
};

struct RayPoint {
    StackSpec spec;
    RayResult result;
    std::optional<double> infinite_r0;
};

void fit_series(const JobConfig& c, Collector& col, const std::string& backend,
                const std::vector<std::pair<double, double>>& series) {
    try {
        const ScalingFit fit = scaling_fit(series, c.fit_n_min, c.fit_min_points);
        col.extra["fits"][backend] = {{"exponent", fit.exponent},
                                      {"prefactor", fit.prefactor},
                                      {"rms_residual", fit.rms_residual},
                                      {"points", fit.points},
                                      {"n_min", c.fit_n_min}};
    } catch (const Error& e) {
        col.extra["fits"][backend] = {{"error", e.what()}};
        col.job_failure(backend, "fit", e.what());
    }
}

void run_stack_sweep(const JobConfig& c, Collector& col, int jobs) {
    const Lattice lattice = c.lattices.front();
    const auto pts = stack_points(c);
    auto point = [&](std::size_t i) { return stack_point_json(pts[i]); };
    const bool scaling = c.kind == JobKind::scaling;

    for (Backend b : c.effective_backends()) {
        const std::string name = to_string(b);
        std::vector<std::pair<double, double>> series;
        if (b == Backend::dipole) {
            const MapOptions opts = dipole_options(c);
            const std::function<DipolePoint(const StackPoint&)> f = [&](const StackPoint& p) {
                StackSpec s = stack_for(c, lattice, p.a, p.a_z, p.n);
                MapRow row = reflectivity_map_point(s, WaistRule{c.waist, p.w}, opts);
                return DipolePoint{std::move(s), row};
            };
            const auto out = sweep_grid(pts, f, jobs);
            col.record(name, out, point);
            CsvTable t(scaling ? std::vector<std::string>{"N", "n_side", "a", "w", "delta_star", "r0",
                                                          "one_minus_r0", "t2", "residual"}
                               : std::vector<std::string>{"a_z", "a", "N", "n_side", "w", "delta_star", "r0",
                                                          "one_minus_r0", "t2", "residual"});
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const auto& v = out[i].value;
                std::vector<CsvCell> row = point_cells(pts[i], v ? v->spec.a : pts[i].a, scaling);
                for (double x : {v ? v->row.delta_star : kNaN, v ? v->row.r0 : kNaN, v ? 1.0 - v->row.r0 : kNaN,
                                 v ? v->row.t2 : kNaN, v ? v->row.residual : kNaN})
                    row.push_back(x);
                t.add_row(std::move(row));
                if (v) series.emplace_back(pts[i].n, 1.0 - v->row.r0);
            }
            col.tables.emplace_back(name, std::move(t));
        } else {
            const RayOptions ropts = ray_options(c);
            const bool with_infinite = c.kind == JobKind::ray;
            const std::function<RayPoint(const StackPoint&)> f = [&](const StackPoint& p) {
                StackSpec s = stack_for(c, lattice, p.a, p.a_z, p.n);
                const WaistRule rule{c.waist, p.w};
                RayPoint rp{s, finite_ray_reflectivity(s, rule.waist_for(s), ropts), std::nullopt};
                rp.result.grid.s_r_ab.resize(0, 0);  // keep only what the table needs
                rp.result.grid.s_r_ba.resize(0, 0);
                if (with_infinite) rp.infinite_r0 = std::abs(infinite_stack_reflectivity(s).r);
                return rp;
            };
            const auto out = sweep_grid(pts, f, jobs);
            col.record(name, out, point);
            std::vector<std::string> cols = scaling ? std::vector<std::string>{"N", "n_side", "a", "w"}
                                                    : std::vector<std::string>{"a_z", "a", "N", "n_side", "w"};
            for (const char* k : {"r0", "one_minus_r0", "M"}) cols.emplace_back(k);
            if (with_infinite) cols.emplace_back("r0_infinite");
            CsvTable t(cols);
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const auto& v = out[i].value;
                std::vector<CsvCell> row = point_cells(pts[i], v ? v->spec.a : pts[i].a, scaling);
                row.push_back(v ? v->result.r0 : kNaN);
                row.push_back(v ? 1.0 - v->result.r0 : kNaN);
                row.push_back(static_cast<long long>(v ? v->result.grid.size() : 0));
                if (with_infinite) row.push_back(v && v->infinite_r0 ? *v->infinite_r0 : kNaN);
                t.add_row(std::move(row));
                if (v) series.emplace_back(pts[i].n, 1.0 - v->result.r0);
            }
            col.tables.emplace_back(name, std::move(t));
        }
        if (scaling) fit_series(c, col, name, series);
    }
}

void run_scan(const JobConfig& c, Collector& col, int jobs) {
    struct Pt {
        Lattice lattice;
        double a_z, a;
    };
    std::vector<Pt> pts;
    for (Lattice l : c.lattices)
        for (double a_z : c.a_z_values)
            for (double a : c.a_values) pts.push_back({l, a_z, a});
    const std::function<ScanRow(const Pt&)> f = [&](const Pt& p) {
        return multiorder_scan(p.lattice, c.shifted, {p.a}, {p.a_z}).front();
    };
    const auto out = sweep_grid(pts, f, jobs);
    col.record("analytic", out, [&](std::size_t i) {
        return json{{"lattice", lattice_name(pts[i].lattice)}, {"a_z", pts[i].a_z}, {"a", pts[i].a}};
    });

    std::size_t shells = 0;
    for (const auto& o : out)
        if (o.value) shells = std::max(shells, o.value->shell_residues.size());
    std::vector<std::string> cols{"lattice", "a_z", "a", "re_gamma_diff", "im_gamma_diff", "r0"};
    for (std::size_t k = 1; k <= shells; ++k) cols.push_back("residual_shell_" + std::to_string(k));
    CsvTable t(cols);
    json minima = json::object();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& v = out[i].value;
        std::vector<CsvCell> row{lattice_name(pts[i].lattice), pts[i].a_z, pts[i].a,
                                 v ? v->gamma_diff.real() : kNaN, v ? v->gamma_diff.imag() : kNaN,
                                 v ? v->r0 : kNaN};
        for (std::size_t k = 0; k < shells; ++k)
            row.push_back(v && k < v->shell_residues.size() ? v->shell_residues[k] : kNaN);
        t.add_row(std::move(row));
        if (v) {
            const std::string key = lattice_name(pts[i].lattice) + "@a_z=" + format_number(pts[i].a_z);
            if (!minima.contains(key) || 1.0 - v->r0 < minima[key]["one_minus_r0"].get<double>())
                minima[key] = {{"a", pts[i].a}, {"one_minus_r0", 1.0 - v->r0}, {"shell_residues", v->shell_residues}};
        }
    }
    col.tables.emplace_back("analytic", std::move(t));
    col.extra["minima"] = minima;
}

void run_design(const JobConfig& c, Collector& col, int jobs) {
    DesignOptions opts;
    opts.integer_tolerance = c.integer_tolerance;
    opts.gamma_diff_tolerance = c.gamma_diff_tolerance;
    opts.eigen_tolerance = c.eigen_tolerance;
    const std::function<std::vector<MultilayerDesign>(const Lattice&)> f = [&](const Lattice& l) {
        const ShellWindow win = two_shell_window(l);
        const double lo = c.a_min > 0 ? c.a_min : win.lower;
        const double hi = c.a_max > 0 ? c.a_max : win.upper;
        return design_multilayer_shifts(l, lo, hi, c.a_z_max, opts);
    };
    const auto out = sweep_grid(c.lattices, f, jobs);
    col.record("analytic", out, [&](std::size_t i) { return json{{"lattice", lattice_name(c.lattices[i])}}; });

    CsvTable t({"lattice", "a_z", "a", "re_gamma_diff", "im_gamma_diff", "eigen_residual", "verified",
                "shell_integers", "shifts"});
    for (std::size_t i = 0; i < c.lattices.size(); ++i) {
        if (!out[i].value) continue;
        for (const auto& d : *out[i].value) {
            std::string ints, shifts;
            for (std::size_t k = 0; k < d.shell_integers.size(); ++k)
                ints += (k ? ";" : "") + std::to_string(d.shell_integers[k]);
            for (std::size_t k = 0; k < d.shifts.size(); ++k)
                shifts += (k ? ";" : "") + format_number(d.shifts[k].x) + " " + format_number(d.shifts[k].y);
            const double g0 = make_stack(c.lattices[i], d.a, d.a_z, 1, 1).gamma0();
            const bool verified = d.gamma_diff.real() < c.gamma_diff_tolerance * g0 &&
                                  d.eigen_residual < c.residual_tolerance;
            t.add_row({lattice_name(c.lattices[i]), d.a_z, d.a, d.gamma_diff.real(), d.gamma_diff.imag(),
                       d.eigen_residual, static_cast<long long>(verified), ints, shifts});
        }
    }
    col.tables.emplace_back("analytic", std::move(t));
}

json config_echo(const JobConfig& c) {
    json echo = json::object();
    std::istringstream is(c.canonical());
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) echo[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return echo;
}

bool reusable(const fs::path& manifest_path, const std::string& hash, const fs::path& dir,
              std::vector<std::string>& outputs, json& manifest) {
    std::ifstream f(manifest_path);
    if (!f) return false;
    try {
        manifest = json::parse(f);
        if (manifest.value("schema_version", 0) != kManifestSchemaVersion) return false;
        if (manifest.value("job_hash", "") != hash || manifest.value("status", "") != "ok") return false;
        outputs.clear();
        for (const auto& o : manifest.at("outputs")) {
            const std::string file = o.at("file").get<std::string>();
            if (!fs::exists(dir / file)) return false;
            outputs.push_back((dir / file).string());
        }
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace

std::vector<Ridge> map_ridges(Lattice lattice, bool shifted, const std::vector<double>& a_grid,
                              const std::vector<double>& a_z_grid, const std::vector<double>& values,
                              const std::vector<bool>& ok) {
    const int na = static_cast<int>(a_grid.size());
    const int nz = static_cast<int>(a_z_grid.size());
    if (static_cast<int>(values.size()) != na * nz || ok.size() != values.size())
        throw ValidationError("map values do not match the grid");
    if (na < 3 || nz < 3) return {};
    auto at = [&](int iz, int ia) { return static_cast<std::size_t>(iz) * na + ia; };

    // Grid nodes the analytic curves pass through, by nearest-node snapping of
    // densely sampled curve points.
    std::vector<char> on_curve(values.size(), 0);
    const ShellWindow win = single_shell_window(lattice);
    const double lo = std::max(a_grid.front() - (a_grid[1] - a_grid[0]), win.lower + 1e-9);
    const double hi = std::min(a_grid.back() + (a_grid[na - 1] - a_grid[na - 2]), win.upper - 1e-9);
    if (lo < hi) {
        const double a_z_top = a_z_grid.back() + (a_z_grid[nz - 1] - a_z_grid[nz - 2]);
        const int n_max = static_cast<int>(std::ceil(2.0 * a_z_top)) + 2;
        for (const auto& cv : resonant_spacing_curves(lattice, shifted, lo, hi, 0, n_max, 4000)) {
            for (const auto& [a_z, a] : cv.points) {
                const int ia = nearest_index(a_grid, a);
                const int iz = nearest_index(a_z_grid, a_z);
                if (ia >= 0 && iz >= 0) on_curve[at(iz, ia)] = 1;
            }
        }
    }

    std::vector<Ridge> ridges;
    for (int iz = 1; iz + 1 < nz; ++iz) {
        for (int ia = 1; ia + 1 < na; ++ia) {
            const std::size_t k = at(iz, ia);
            if (!ok[k]) continue;
            bool peak = true;
            for (int dz = -1; dz <= 1 && peak; ++dz)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (!dz && !dx) continue;
                    const std::size_t q = at(iz + dz, ia + dx);
                    if (ok[q] && !(values[k] > values[q])) {
                        peak = false;
                        break;
                    }
                }
            if (!peak) continue;
            Ridge r{ia, iz, a_grid[ia], a_z_grid[iz], values[k], std::numeric_limits<int>::max(), false};
            for (int jz = 0; jz < nz; ++jz)
                for (int ja = 0; ja < na; ++ja)
                    if (on_curve[at(jz, ja)])
                        r.cell_distance = std::min(r.cell_distance, std::max(std::abs(jz - iz), std::abs(ja - ia)));
            r.on_curve = r.cell_distance <= 1;
            ridges.push_back(r);
        }
    }
    return ridges;
}

RunReport run_job(const JobConfig& config, const RunOptions& options) {
    config.validate();
    const fs::path dir(config.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ValidationError("cannot create output directory " + dir.string());

    RunReport report;
    const std::string hash = config.hash();
    const fs::path manifest_path = dir / (config.name + "_manifest.json");
    report.manifest_path = manifest_path.string();
    if (!options.force && reusable(manifest_path, hash, dir, report.outputs, report.manifest)) {
        report.skipped = true;
        if (options.log) *options.log << config.name << ": up to date (" << hash << "), skipped\n";
        return report;
    }

    if (options.log) *options.log << config.name << ": " << to_string(config.kind) << " job " << hash << "\n";
    Collector col;
    col.log = options.log;
    const std::string started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    switch (config.kind) {
        case JobKind::map: run_map(config, col, config.jobs); break;
        case JobKind::scaling:
        case JobKind::resonance:
        case JobKind::ray: run_stack_sweep(config, col, config.jobs); break;
        case JobKind::scan: run_scan(config, col, config.jobs); break;
        case JobKind::design: run_design(config, col, config.jobs); break;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json outputs = json::array();
    for (const auto& [suffix, table] : col.tables) {
        const std::string file = config.name + "_" + suffix + ".csv";
        table.write((dir / file).string());
        report.outputs.push_back((dir / file).string());
        outputs.push_back({{"table", suffix}, {"file", file}, {"rows", table.rows()}});
    }

    json m;
    m["schema_version"] = kManifestSchemaVersion;
    m["software"] = {{"name", "superwave"}, {"version", SUPERWAVE_VERSION}};
    m["job"] = config.name;
    m["kind"] = to_string(config.kind);
    m["job_hash"] = hash;
    m["config"] = config_echo(config);
    m["jobs"] = config.jobs;
    m["started"] = started;
    m["finished"] = utc_now();
    m["wall_seconds"] = wall;
    m["status"] = col.failure_count ? "partial" : "ok";
    m["outputs"] = outputs;
    m["runtimes"] = col.runtimes;
    m["failures"] = col.failures;
    for (const auto& [k, v] : col.extra.items()) m[k] = v;

    const std::string tmp = manifest_path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw Error("cannot write " + tmp);
        f << m.dump(2) << '\n';
    }
    fs::rename(tmp, manifest_path);

    report.manifest = std::move(m);
    report.failures = col.failure_count;
    if (options.log)
        *options.log << config.name << ": " << (col.failure_count ? "partial" : "ok") << " in " << wall << " s -> "
                     << manifest_path.string() << "\n";
    return report;
}

}  // namespace superwave
