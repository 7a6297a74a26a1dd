#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "superwave/csv.hpp"
#include "superwave/errors.hpp"
#include "superwave/harness.hpp"

namespace superwave {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
    throw ValidationError("key '" + key + "': " + why + " (got '" + value + "')");
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v))
        bad_value(key, text, "expected a finite number");
    return v;
}

int parse_int(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) bad_value(key, text, "expected an integer");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    bad_value(key, text, "expected true or false");
}

// "x, y, z" or "start:stop:count". An empty value gives an empty axis, which
// validate() rejects.
std::vector<double> parse_axis(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) return {};
    if (t.find(':') != std::string::npos) {
        const auto parts = split(t, ':');
        if (parts.size() != 3) bad_value(key, text, "range must be start:stop:count");
        const double lo = parse_double(key, parts[0]);
        const double hi = parse_double(key, parts[1]);
        const int count = parse_int(key, parts[2]);
        if (count < 1) bad_value(key, text, "range count must be positive");
        if (count == 1) return {lo};
        std::vector<double> v(count);
        for (int i = 0; i < count; ++i) v[i] = lo + (hi - lo) * i / (count - 1);
        v.back() = hi;
        return v;
    }
    std::vector<double> v;
    for (const auto& p : split(t, ',')) v.push_back(parse_double(key, p));
    return v;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) return {};
    std::vector<int> v;
    for (const auto& p : split(t, ',')) v.push_back(parse_int(key, p));
    return v;
}

Lattice parse_lattice(const std::string& key, const std::string& t) {
    if (t == "square") return Lattice::square;
    if (t == "triangular") return Lattice::triangular;
    bad_value(key, t, "expected square or triangular");
}

std::string lattice_name(Lattice l) { return l == Lattice::square ? "square" : "triangular"; }

Backend parse_backend(const std::string& key, const std::string& t) {
    if (t == "analytic") return Backend::analytic;
    if (t == "dipole") return Backend::dipole;
    if (t == "ray") return Backend::ray;
    bad_value(key, t, "expected analytic, dipole, ray or all");
}

std::vector<Backend> backends_for(JobKind kind) {
    switch (kind) {
        case JobKind::map: return {Backend::analytic, Backend::dipole, Backend::ray};
        case JobKind::scaling: return {Backend::dipole, Backend::ray};
        case JobKind::scan: return {Backend::analytic};
        case JobKind::design: return {Backend::analytic};
        case JobKind::ray: return {Backend::ray};
        case JobKind::resonance: return {Backend::dipole, Backend::ray};
    }
    return {};
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + f(v[i]);
    return s;
}

bool perfect_square(int n) {
    if (n < 1) return false;
    const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    return r * r == n;
}

}  // namespace

std::string to_string(JobKind kind) {
    switch (kind) {
        case JobKind::map: return "map";
        case JobKind::scaling: return "scaling";
        case JobKind::scan: return "scan";
        case JobKind::design: return "design";
        case JobKind::ray: return "ray";
        case JobKind::resonance: return "resonance";
    }
    return "?";
}

std::string to_string(Backend backend) {
    switch (backend) {
        case Backend::analytic: return "analytic";
        case Backend::dipole: return "dipole";
        case Backend::ray: return "ray";
    }
    return "?";
}

JobKind parse_job_kind(const std::string& text) {
    for (JobKind k : {JobKind::map, JobKind::scaling, JobKind::scan, JobKind::design, JobKind::ray,
                      JobKind::resonance})
        if (to_string(k) == text) return k;
    bad_value("kind", text, "expected map, scaling, scan, design, ray or resonance");
}

void apply_config_key(JobConfig& c, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    if (key == "name") {
        if (value.empty() || value.find_first_of("/\\ \t") != std::string::npos)
            bad_value(key, value, "expected a non-empty name without spaces or slashes");
        c.name = value;
    } else if (key == "kind") {
        c.kind = parse_job_kind(value);
    } else if (key == "lattice") {
        c.lattices.clear();
        for (const auto& p : split(value, ',')) c.lattices.push_back(parse_lattice(key, p));
    } else if (key == "shifted") {
        c.shifted = parse_bool(key, value);
    } else if (key == "n_z") {
        c.n_z = parse_int(key, value);
    } else if (key == "patch") {
        if (value == "rhombus") c.patch = PatchShape::rhombus;
        else if (value == "circle") c.patch = PatchShape::circle;
        else bad_value(key, value, "expected rhombus or circle");
    } else if (key == "snap_resonance") {
        c.snap_resonance = parse_bool(key, value);
    } else if (key == "a") {
        c.a_values = parse_axis(key, value);
    } else if (key == "a_z") {
        c.a_z_values = parse_axis(key, value);
    } else if (key == "n") {
        c.n_values = parse_int_list(key, value);
    } else if (key == "w") {
        c.w_values = parse_axis(key, value);
    } else if (key == "waist") {
        if (value == "relative") c.waist = WaistRule::Kind::relative;
        else if (value == "fixed") c.waist = WaistRule::Kind::fixed;
        else bad_value(key, value, "expected relative or fixed");
    } else if (key == "backend") {
        c.backends.clear();
        if (value != "all")
            for (const auto& p : split(value, ',')) c.backends.push_back(parse_backend(key, p));
    } else if (key == "a_min") {
        c.a_min = parse_double(key, value);
    } else if (key == "a_max") {
        c.a_max = parse_double(key, value);
    } else if (key == "a_z_max") {
        c.a_z_max = parse_double(key, value);
    } else if (key == "fit_n_min") {
        c.fit_n_min = parse_double(key, value);
    } else if (key == "fit_min_points") {
        c.fit_min_points = parse_int(key, value);
    } else if (key == "shift_phase") {
        if (value == "per_bounce") c.shift_phase = ShiftPhase::per_bounce;
        else if (value == "folded") c.shift_phase = ShiftPhase::folded;
        else bad_value(key, value, "expected per_bounce or folded");
    } else if (key == "splitting") {
        if (value == "per_order") c.splitting = Splitting::per_order;
        else if (value == "equal") c.splitting = Splitting::equal;
        else bad_value(key, value, "expected per_order or equal");
    } else if (key == "residual_tolerance") {
        c.residual_tolerance = parse_double(key, value);
    } else if (key == "integer_tolerance") {
        c.integer_tolerance = parse_double(key, value);
    } else if (key == "gamma_diff_tolerance") {
        c.gamma_diff_tolerance = parse_double(key, value);
    } else if (key == "eigen_tolerance") {
        c.eigen_tolerance = parse_double(key, value);
    } else if (key == "out") {
        c.out_dir = value;
    } else if (key == "jobs") {
        c.jobs = parse_int(key, value);
    } else {
        throw ValidationError("unknown config key '" + key + "'");
    }
}

JobConfig parse_job_config(const std::string& text, const std::string& origin, JobConfig base) {
    JobConfig c = std::move(base);
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        try {
            apply_config_key(c, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ValidationError& e) {
            throw ValidationError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return c;
}

JobConfig load_job_config(const std::string& path, JobConfig base) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot read config file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_job_config(ss.str(), path, std::move(base));
}

std::vector<Backend> JobConfig::effective_backends() const {
    if (backends.empty()) return backends_for(kind);
    std::vector<Backend> out;
    for (Backend b : backends_for(kind))  // canonical order, no duplicates
        if (std::find(backends.begin(), backends.end(), b) != backends.end()) out.push_back(b);
    return out;
}

void JobConfig::validate() const {
    auto fail = [](const std::string& m) { throw ValidationError(m); };
    if (name.empty()) fail("job name is empty");
    if (lattices.empty()) fail("lattice list is empty");
    const auto allowed = backends_for(kind);
    for (Backend b : backends)
        if (std::find(allowed.begin(), allowed.end(), b) == allowed.end())
            fail("backend '" + to_string(b) + "' is not valid for " + to_string(kind) + " jobs");
    if (jobs < 1) fail("jobs must be at least 1");
    if (residual_tolerance <= 0 || integer_tolerance <= 0 || gamma_diff_tolerance <= 0 || eigen_tolerance <= 0)
        fail("tolerances must be positive");

    const bool multi_lattice = kind == JobKind::scan || kind == JobKind::design;
    if (!multi_lattice && lattices.size() != 1) fail(to_string(kind) + " jobs take exactly one lattice");

    auto need = [&](bool empty, const char* axis) {
        if (empty) fail(std::string("sweep axis '") + axis + "' is empty");
    };
    auto single = [&](std::size_t size, const char* axis) {
        if (size != 1) fail(std::string("axis '") + axis + "' must hold one value for " + to_string(kind) + " jobs");
    };
    auto positive = [&](const std::vector<double>& v, const char* axis) {
        for (double x : v)
            if (!(x > 0)) fail(std::string("axis '") + axis + "' must be positive");
    };

    switch (kind) {
        case JobKind::map:
            need(a_values.empty(), "a");
            need(a_z_values.empty(), "a_z");
            need(n_values.empty(), "n");
            need(w_values.empty(), "w");
            single(n_values.size(), "n");
            single(w_values.size(), "w");
            if (n_z != 2) fail("map jobs use two layers");
            break;
        case JobKind::scaling:
        case JobKind::ray:
        case JobKind::resonance:
            need(a_values.empty(), "a");
            need(a_z_values.empty(), "a_z");
            need(n_values.empty(), "n");
            need(w_values.empty(), "w");
            if (kind == JobKind::scaling) {
                single(a_values.size(), "a");
                single(a_z_values.size(), "a_z");
                single(w_values.size(), "w");
            }
            if (kind != JobKind::resonance && n_z != 2) fail("ray and scaling jobs use two layers");
            if (n_z < 1) fail("n_z must be positive");
            break;
        case JobKind::scan:
            need(a_values.empty(), "a");
            need(a_z_values.empty(), "a_z");
            break;
        case JobKind::design:
            if (!(a_z_max > 0)) fail("a_z_max must be positive");
            if ((a_min != 0 || a_max != 0) && !(a_min < a_max)) fail("a_min must be below a_max");
            break;
    }
    positive(a_values, "a");
    positive(a_z_values, "a_z");
    positive(w_values, "w");
    for (int n : n_values)
        if (!perfect_square(n)) fail("n = " + std::to_string(n) + " is not a perfect square");
    if (fit_min_points < 2) fail("fit_min_points must be at least 2");
    if (shifted && n_z != 2 && n_z != 4) fail("shifted stacks need two or four layers");
    if (n_z != 2) {
        const auto eff = effective_backends();
        if (std::find(eff.begin(), eff.end(), Backend::ray) != eff.end())
            fail("the ray backend needs two layers");
    }
}

std::string JobConfig::canonical() const {
    std::ostringstream os;
    os << "name = " << name << '\n'
       << "kind = " << to_string(kind) << '\n'
       << "lattice = " << join(lattices, lattice_name) << '\n'
       << "shifted = " << (shifted ? "true" : "false") << '\n'
       << "n_z = " << n_z << '\n'
       << "patch = " << (patch == PatchShape::rhombus ? "rhombus" : "circle") << '\n'
       << "snap_resonance = " << (snap_resonance ? "true" : "false") << '\n'
       << "a = " << join(a_values, num) << '\n'
       << "a_z = " << join(a_z_values, num) << '\n'
       << "n = " << join(n_values, [](int n) { return std::to_string(n); }) << '\n'
       << "w = " << join(w_values, num) << '\n'
       << "waist = " << (waist == WaistRule::Kind::relative ? "relative" : "fixed") << '\n'
       << "backend = " << join(effective_backends(), [](Backend b) { return to_string(b); }) << '\n'
       << "a_min = " << num(a_min) << '\n'
       << "a_max = " << num(a_max) << '\n'
       << "a_z_max = " << num(a_z_max) << '\n'
       << "fit_n_min = " << num(fit_n_min) << '\n'
       << "fit_min_points = " << fit_min_points << '\n'
       << "shift_phase = " << (shift_phase == ShiftPhase::per_bounce ? "per_bounce" : "folded") << '\n'
       << "splitting = " << (splitting == Splitting::per_order ? "per_order" : "equal") << '\n'
       << "residual_tolerance = " << num(residual_tolerance) << '\n'
       << "integer_tolerance = " << num(integer_tolerance) << '\n'
       << "gamma_diff_tolerance = " << num(gamma_diff_tolerance) << '\n'
       << "eigen_tolerance = " << num(eigen_tolerance) << '\n';
    return os.str();
}

uint64_t fnv1a64(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string JobConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
}

std::vector<std::string> builtin_job_names() {
    return {"fig2a", "fig2b", "fig2c", "fig3", "fig4a", "fig4b", "fig4c", "fig5a", "fig5b", "design4"};
}

JobConfig builtin_job(const std::string& name) {
    const char* text = nullptr;
    if (name == "fig2a") {
        text = R"(kind = map
lattice = square
shifted = false
a = 1.05:1.40:25
a_z = 1:4:25
n = 225
w = 0.3
)";
    } else if (name == "fig2b") {
        text = R"(kind = map
lattice = square
shifted = true
a = 1.05:1.40:25
a_z = 1:4:25
n = 225
w = 0.3
)";
    } else if (name == "fig2c") {
        text = R"(kind = map
lattice = triangular
shifted = false
a = 1.17:1.98:25
a_z = 1:4:25
n = 225
w = 0.3
)";
    } else if (name == "fig3") {
        text = R"(kind = scaling
backend = ray
lattice = square
shifted = true
snap_resonance = true
a = 1.3416
a_z = 3
n = 144,256,400,576,784,1024,1600,2500,3600,4900,6400,10000
w = 0.3
fit_n_min = 1024
)";
    } else if (name == "fig4a") {
        text = R"(kind = resonance
lattice = square
shifted = true
snap_resonance = true
a = 1.3416
a_z = 3
n = 144,256,400,576
w = 0.1:0.6:11
)";
    } else if (name == "fig4b") {
        text = R"(kind = scaling
lattice = square
shifted = true
snap_resonance = true
a = 1.3416
a_z = 3
n = 144,256,400,576,784,1024
w = 0.3
fit_n_min = 576
fit_min_points = 3
)";
    } else if (name == "fig4c") {
        text = R"(kind = scaling
lattice = triangular
shifted = false
snap_resonance = true
a = 1.925
a_z = 2.5
n = 144,256,400,576,784,900,1024
w = 0.3
fit_n_min = 784
fit_min_points = 3
)";
    } else if (name == "fig5a") {
        text = R"(kind = scan
lattice = square
shifted = true
a = 1.415:1.995:581
a_z = 2.5,3.5,4.5
)";
    } else if (name == "fig5b") {
        text = R"(kind = resonance
backend = dipole
lattice = square
shifted = true
a = 1.58
a_z = 4.5
n = 144,256,400,576,784
w = 0.3
)";
    } else if (name == "design4") {
        text = R"(kind = design
lattice = square,triangular
a_z_max = 10
)";
    } else {
        std::string names;
        for (const auto& n : builtin_job_names()) names += " " + n;
        throw ValidationError("unknown built-in job '" + name + "'; available:" + names);
    }
    JobConfig c = parse_job_config(text, name);
    c.name = name;
    return c;
}

}  // namespace superwave
