#include "npsh/config.hpp"

#include "npsh/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace npsh {

namespace {

class Parser {
public:
    explicit Parser(std::string origin) : origin_(std::move(origin)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& field, const std::string& what) const
    {
        std::ostringstream os;
        os << origin_;
        if (node.IsDefined() && node.Mark().line >= 0) os << ":" << node.Mark().line + 1;
        os << ": field '" << field << "': " << what;
        throw ConfigError(os.str());
    }

    void require_map(const YAML::Node& node, const std::string& field, std::initializer_list<const char*> keys) const
    {
        if (!node.IsMap()) fail(node, field, "expected a mapping");
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& kv : node) {
            const std::string key = kv.first.as<std::string>();
            if (!allowed.count(key)) fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
        }
    }

    template <typename T>
    T scalar(const YAML::Node& node, const std::string& field) const
    {
        if (!node.IsScalar()) fail(node, field, "expected a scalar");
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, field, "cannot convert '" + node.Scalar() + "'");
        }
    }

    double real(const YAML::Node& node, const std::string& field) const
    {
        const double v = scalar<double>(node, field);
        if (!std::isfinite(v)) fail(node, field, "must be finite");
        return v;
    }

    std::vector<std::vector<double>> matrix(const YAML::Node& node, const std::string& field, int n) const
    {
        if (!node.IsSequence() || static_cast<int>(node.size()) != n) {
            fail(node, field, "expected " + std::to_string(n) + " rows");
        }
        std::vector<std::vector<double>> out;
        for (std::size_t i = 0; i < node.size(); ++i) {
            const YAML::Node row = node[i];
            const std::string rf = field + "[" + std::to_string(i) + "]";
            if (!row.IsSequence() || static_cast<int>(row.size()) != n) {
                fail(row, rf, "expected " + std::to_string(n) + " entries");
            }
            std::vector<double> r;
            for (std::size_t j = 0; j < row.size(); ++j) r.push_back(real(row[j], rf + "[" + std::to_string(j) + "]"));
            out.push_back(std::move(r));
        }
        return out;
    }

    HermitianMatrix hermitian(const YAML::Node& node, const std::string& field, int n) const
    {
        require_map(node, field, {"real", "imag"});
        if (!node["real"]) fail(node, field + ".real", "missing");
        const auto re = matrix(node["real"], field + ".real", n);
        std::vector<std::vector<double>> im(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
        if (node["imag"]) im = matrix(node["imag"], field + ".imag", n);
        ComplexMatrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = Complex(re[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], im[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
        try {
            return HermitianMatrix(m);
        } catch (const std::invalid_argument&) {
            fail(node, field, "matrix is not Hermitian");
        }
    }

    FourierMode mode(const YAML::Node& node, const std::string& field, int axes) const
    {
        require_map(node, field, {"amplitude", "wavevector", "phase"});
        FourierMode m;
        if (!node["amplitude"]) fail(node, field + ".amplitude", "missing");
        m.amplitude = real(node["amplitude"], field + ".amplitude");
        const YAML::Node k = node["wavevector"];
        if (!k || !k.IsSequence() || static_cast<int>(k.size()) != axes) {
            fail(k ? k : node, field + ".wavevector", "expected " + std::to_string(axes) + " integers (one per real axis)");
        }
        for (std::size_t i = 0; i < k.size(); ++i) m.wavevector.push_back(scalar<int>(k[i], field + ".wavevector"));
        if (node["phase"]) m.phase = real(node["phase"], field + ".phase");
        return m;
    }

    std::vector<FourierMode> modes(const YAML::Node& node, const std::string& field, int axes) const
    {
        if (!node || !node.IsSequence()) fail(node, field, "expected a list of modes");
        std::vector<FourierMode> out;
        for (std::size_t i = 0; i < node.size(); ++i) out.push_back(mode(node[i], field + "[" + std::to_string(i) + "]", axes));
        return out;
    }

private:
    std::string origin_;
};

double evaluate_modes(std::span<const FourierMode> modes, std::span<const double> x)
{
    double s = 0.0;
    for (const FourierMode& m : modes) {
        double arg = m.phase;
        for (std::size_t a = 0; a < x.size(); ++a) arg += 2 * M_PI * m.wavevector[a] * x[a];
        s += m.amplitude * std::cos(arg);
    }
    return s;
}

std::string resolve(const std::string& path, const std::filesystem::path& base)
{
    if (path.empty()) return path;
    const std::filesystem::path p(path);
    return p.is_absolute() ? path : (base / p).string();
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin)
{
    const Parser P(origin);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << origin << ":" << e.mark.line + 1 << ": " << e.msg;
        throw ConfigError(os.str());
    }
    if (!root.IsMap()) throw ConfigError(origin + ": top level must be a mapping");
    P.require_map(root, "", {"command", "n", "N", "active", "g", "h", "F", "u_star", "schedule", "tolerances",
                             "verify", "output_dir", "seed"});

    RunConfig c;
    if (!root["command"]) P.fail(root, "command", "missing");
    const std::string cmd = P.scalar<std::string>(root["command"], "command");
    if (cmd == "solve") c.command = Command::Solve;
    else if (cmd == "manufacture") c.command = Command::Manufacture;
    else if (cmd == "verify") c.command = Command::Verify;
    else P.fail(root["command"], "command", "expected solve, manufacture or verify");

    if (root["seed"]) c.seed = P.scalar<std::uint64_t>(root["seed"], "seed");
    if (root["output_dir"]) c.output_dir = P.scalar<std::string>(root["output_dir"], "output_dir");

    if (root["verify"]) {
        const YAML::Node v = root["verify"];
        P.require_map(v, "verify", {"dims", "trials", "uniqueness"});
        if (v["dims"]) {
            if (!v["dims"].IsSequence()) P.fail(v["dims"], "verify.dims", "expected a list");
            c.verify_dims.clear();
            for (std::size_t i = 0; i < v["dims"].size(); ++i) {
                const int d = P.scalar<int>(v["dims"][i], "verify.dims");
                if (d < 2 || d > 6) P.fail(v["dims"][i], "verify.dims", "dimensions must lie in [2, 6]");
                c.verify_dims.push_back(d);
            }
        }
        if (v["trials"]) {
            c.verify_trials = P.scalar<int>(v["trials"], "verify.trials");
            if (c.verify_trials < 1) P.fail(v["trials"], "verify.trials", "must be positive");
        }
        if (v["uniqueness"]) c.uniqueness = P.scalar<bool>(v["uniqueness"], "verify.uniqueness");
    }

    if (root["tolerances"]) {
        const YAML::Node t = root["tolerances"];
        P.require_map(t, "tolerances", {"outer", "inner", "max_krylov", "max_newton", "min_dt"});
        auto positive = [&](const char* key, double& out) {
            if (!t[key]) return;
            out = P.real(t[key], std::string("tolerances.") + key);
            if (!(out > 0.0)) P.fail(t[key], std::string("tolerances.") + key, "must be positive");
        };
        positive("outer", c.solver.tol);
        positive("inner", c.solver.inner_rtol);
        positive("min_dt", c.solver.min_dt);
        if (t["max_krylov"]) c.solver.max_krylov = P.scalar<int>(t["max_krylov"], "tolerances.max_krylov");
        if (t["max_newton"]) c.solver.max_newton = P.scalar<int>(t["max_newton"], "tolerances.max_newton");
    }

    const bool needs_problem = c.command != Command::Verify || root["n"] || root["g"];
    if (!needs_problem) return c;
    c.has_problem = true;

    if (!root["n"]) P.fail(root, "n", "missing");
    if (!root["N"]) P.fail(root, "N", "missing");
    c.n = P.scalar<int>(root["n"], "n");
    c.N = P.scalar<int>(root["N"], "N");
    if (root["active"]) c.active = P.scalar<int>(root["active"], "active");
    try {
        TorusGrid(c.n, c.N, c.active);
    } catch (const std::invalid_argument& e) {
        P.fail(root["N"], "n/N/active", e.what());
    }
    const int axes = 2 * (c.active < 0 ? c.n : c.active);

    if (!root["g"]) P.fail(root, "g", "missing");
    c.g = P.hermitian(root["g"], "g", c.n);

    if (root["h"]) {
        const YAML::Node h = root["h"];
        P.require_map(h, "h", {"kind", "real", "imag", "amplitude", "wavevector", "phase", "path"});
        const std::string kind = h["kind"] ? P.scalar<std::string>(h["kind"], "h.kind") : "constant";
        if (kind == "constant") {
            c.h.kind = MetricFieldSpec::Kind::Constant;
            if (h["real"]) {
                YAML::Node m;
                m["real"] = h["real"];
                if (h["imag"]) m["imag"] = h["imag"];
                c.h.matrix = P.hermitian(m, "h", c.n);
            }
        } else if (kind == "conformal-mode") {
            c.h.kind = MetricFieldSpec::Kind::ConformalMode;
            YAML::Node m;
            for (const char* key : {"amplitude", "wavevector", "phase"})
                if (h[key]) m[key] = h[key];
            c.h.mode = P.mode(m, "h", axes);
            if (std::abs(c.h.mode.amplitude) >= 1.0) P.fail(h["amplitude"], "h.amplitude", "must satisfy |a| < 1");
        } else if (kind == "file") {
            c.h.kind = MetricFieldSpec::Kind::File;
            if (!h["path"]) P.fail(h, "h.path", "missing");
            c.h.path = P.scalar<std::string>(h["path"], "h.path");
        } else {
            P.fail(h["kind"], "h.kind", "expected constant, conformal-mode or file");
        }
    }

    auto scalar_spec = [&](const YAML::Node& node, const std::string& field) {
        ScalarFieldSpec s;
        P.require_map(node, field, {"kind", "modes", "path"});
        const std::string kind = node["kind"] ? P.scalar<std::string>(node["kind"], field + ".kind") : "fourier-modes";
        if (kind == "zero") {
            s.kind = ScalarFieldSpec::Kind::Zero;
        } else if (kind == "fourier-modes") {
            s.kind = ScalarFieldSpec::Kind::FourierModes;
            s.modes = P.modes(node["modes"], field + ".modes", axes);
        } else if (kind == "file") {
            s.kind = ScalarFieldSpec::Kind::File;
            if (!node["path"]) P.fail(node, field + ".path", "missing");
            s.path = P.scalar<std::string>(node["path"], field + ".path");
        } else {
            P.fail(node["kind"], field + ".kind", "expected zero, fourier-modes or file");
        }
        return s;
    };

    if (root["F"]) c.F = scalar_spec(root["F"], "F");
    if (root["u_star"]) {
        const YAML::Node us = root["u_star"];
        YAML::Node copy = YAML::Clone(us);
        if (us.IsMap() && us["margin_min"]) {
            c.margin_min = P.real(us["margin_min"], "u_star.margin_min");
            copy.remove("margin_min");
        }
        c.u_star = scalar_spec(copy, "u_star");
    }
    if (c.command == Command::Manufacture && !c.u_star) P.fail(root, "u_star", "required by command 'manufacture'");
    if (c.command == Command::Manufacture && root["F"]) P.fail(root["F"], "F", "not allowed with command 'manufacture'");

    c.schedule = uniform_schedule(8);
    if (root["schedule"]) {
        const YAML::Node s = root["schedule"];
        P.require_map(s, "schedule", {"steps", "t"});
        if (s["steps"] && s["t"]) P.fail(s, "schedule", "give either steps or t, not both");
        if (s["steps"]) {
            const int k = P.scalar<int>(s["steps"], "schedule.steps");
            if (k < 1) P.fail(s["steps"], "schedule.steps", "must be positive");
            c.schedule = uniform_schedule(k);
        } else if (s["t"]) {
            if (!s["t"].IsSequence()) P.fail(s["t"], "schedule.t", "expected a list");
            c.schedule.clear();
            for (std::size_t i = 0; i < s["t"].size(); ++i) c.schedule.push_back(P.real(s["t"][i], "schedule.t"));
            bool ok = c.schedule.size() >= 2 && c.schedule.front() == 0.0 && c.schedule.back() == 1.0;
            for (std::size_t i = 1; ok && i < c.schedule.size(); ++i) ok = c.schedule[i] > c.schedule[i - 1];
            if (!ok) P.fail(s["t"], "schedule.t", "must increase strictly from 0 to 1");
        }
    }
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot read config");
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig c = parse_config(ss.str(), path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    c.h.path = resolve(c.h.path, base);
    c.F.path = resolve(c.F.path, base);
    if (c.u_star) c.u_star->path = resolve(c.u_star->path, base);
    return c;
}

ScalarField make_scalar_field(const TorusGrid& grid, const ScalarFieldSpec& spec)
{
    switch (spec.kind) {
    case ScalarFieldSpec::Kind::Zero:
        return ScalarField(grid);
    case ScalarFieldSpec::Kind::FourierModes:
        return ScalarField::sample(grid, [&](std::span<const double> x) { return evaluate_modes(spec.modes, x); });
    case ScalarFieldSpec::Kind::File: {
        ScalarField f = read_scalar_field(spec.path);
        if (!(f.grid() == grid)) throw FieldIoError(spec.path, "grid does not match the configured grid");
        return f;
    }
    }
    throw std::logic_error("unreachable");
}

ProblemSpec build_problem(const RunConfig& c)
{
    try {
        const TorusGrid grid(c.n, c.N, c.active);
        Metric(c.g);
        MatrixField h(grid);
        switch (c.h.kind) {
        case MetricFieldSpec::Kind::Constant:
            h = MatrixField::constant(grid, c.h.matrix.value_or(c.g));
            break;
        case MetricFieldSpec::Kind::ConformalMode: {
            const FourierMode m = c.h.mode;
            const ScalarField factor = ScalarField::sample(
                grid, [&](std::span<const double> x) { return 1.0 + evaluate_modes(std::span(&m, 1), x); });
            for (std::size_t p = 0; p < grid.size(); ++p) h.set(p, c.g * factor[p]);
            break;
        }
        case MetricFieldSpec::Kind::File:
            h = read_matrix_field(c.h.path);
            if (!(h.grid() == grid)) throw FieldIoError(c.h.path, "grid does not match the configured grid");
            break;
        }
        if (c.command == Command::Manufacture) {
            return manufacture(c.g, h, make_scalar_field(grid, *c.u_star), c.margin_min);
        }
        ProblemSpec spec{c.g, std::move(h), make_scalar_field(grid, c.F)};
        spec.validate();
        return spec;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid problem: ") + e.what());
    }
}

}  // namespace npsh
