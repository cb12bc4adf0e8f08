#pragma once

// Config-driven front end: strict-schema JSON configs, command dispatch,
// and deterministic CSV/JSON artifacts with a provenance header. Output
// floats are fixed at 17 significant digits so reruns are byte-identical.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bslab/bskernel.hpp"
#include "bslab/errors.hpp"
#include "bslab/field.hpp"
#include "bslab/measure.hpp"
#include "bslab/spectral.hpp"

namespace bslab {

inline constexpr const char* tool_version = "bslab 0.1.0";

namespace detail {

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Strict schema helper: every present key must be allowed, every required
// key must be present.
inline void require_keys(const nlohmann::json& obj, const std::string& where,
                         const std::vector<std::string>& required,
                         const std::vector<std::string>& optional = {}) {
    if (!obj.is_object())
        throw validation_error("config: " + where + " must be an object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const auto& k : required)
            known = known || item.key() == k;
        for (const auto& k : optional)
            known = known || item.key() == k;
        if (!known)
            throw validation_error("config: unknown key \"" + item.key() +
                                   "\" in " + where);
    }
    for (const auto& k : required)
        if (!obj.contains(k))
            throw validation_error("config: missing key \"" + k + "\" in " + where);
}

inline double number_field(const nlohmann::json& obj, const std::string& key,
                           const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number())
        throw validation_error("config: " + where + "." + key + " must be a number");
    return v.get<double>();
}

inline int int_field(const nlohmann::json& obj, const std::string& key,
                     const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer())
        throw validation_error("config: " + where + "." + key +
                               " must be an integer");
    return v.get<int>();
}

inline std::vector<double> list_field(const nlohmann::json& obj,
                                      const std::string& key,
                                      const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_array() || v.empty())
        throw validation_error("config: " + where + "." + key +
                               " must be a nonempty array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number())
            throw validation_error("config: " + where + "." + key +
                                   " entries must be numbers");
        const double x = e.get<double>();
        if (!(x > 0.0) || !std::isfinite(x))
            throw validation_error("config: " + where + "." + key +
                                   " entries must be positive");
        out.push_back(x);
    }
    return out;
}

} // namespace detail

enum class Command {
    gamma_sweep,
    bound_state,
    cmu,
    eigenfunction,
    kato_check,
    perturbation,
    convergence,
    norm_limit,
};

inline const std::map<std::string, Command>& command_table() {
    static const std::map<std::string, Command> table = {
        {"gamma_sweep", Command::gamma_sweep},
        {"bound_state", Command::bound_state},
        {"cmu", Command::cmu},
        {"eigenfunction", Command::eigenfunction},
        {"kato_check", Command::kato_check},
        {"perturbation", Command::perturbation},
        {"convergence", Command::convergence},
        {"norm_limit", Command::norm_limit},
    };
    return table;
}

// Natural artifact format per command: scalar reports are JSON, sweeps CSV.
inline const char* command_format(Command c) {
    return c == Command::cmu ? "json" : "csv";
}

// 16 hex digits over the canonical (sorted-key, no-whitespace) dump, so the
// hash moves exactly when a semantic field moves.
inline std::string config_hash(const nlohmann::json& config) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(config.dump())));
    return std::string("fnv1a64:") + buf;
}

inline AtomicMeasure build_measure(const nlohmann::json& spec) {
    if (!spec.is_object() || !spec.contains("kind") || !spec.at("kind").is_string())
        throw validation_error("config: measure needs a string \"kind\"");
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "circle") {
        detail::require_keys(spec, "measure", {"kind", "r", "n"});
        return circle(detail::number_field(spec, "r", "measure"),
                      detail::int_field(spec, "n", "measure"));
    }
    if (kind == "segment") {
        detail::require_keys(spec, "measure", {"kind", "ax", "ay", "bx", "by", "n"});
        return segment({detail::number_field(spec, "ax", "measure"),
                        detail::number_field(spec, "ay", "measure")},
                       {detail::number_field(spec, "bx", "measure"),
                        detail::number_field(spec, "by", "measure")},
                       detail::int_field(spec, "n", "measure"));
    }
    if (kind == "polyline") {
        detail::require_keys(spec, "measure", {"kind", "vertices", "n_per_unit"});
        const auto& vs = spec.at("vertices");
        if (!vs.is_array() || vs.size() < 2)
            throw validation_error("config: polyline vertices need two or more points");
        std::vector<Point> pts;
        for (const auto& v : vs) {
            if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
                throw validation_error("config: polyline vertex must be [x, y]");
            pts.push_back({v[0].get<double>(), v[1].get<double>()});
        }
        return polyline(pts, detail::number_field(spec, "n_per_unit", "measure"));
    }
    if (kind == "radial_density") {
        detail::require_keys(spec, "measure", {"kind", "gamma", "n_r", "n_theta"});
        return radial_density(detail::number_field(spec, "gamma", "measure"),
                              detail::int_field(spec, "n_r", "measure"),
                              detail::int_field(spec, "n_theta", "measure"));
    }
    if (kind == "grid_density") {
        detail::require_keys(spec, "measure", {"kind", "density", "box", "nx", "ny"});
        const auto& b = spec.at("box");
        if (!b.is_array() || b.size() != 4)
            throw validation_error("config: measure.box must be [xmin, ymin, xmax, ymax]");
        const Box box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                      b[3].get<double>()};
        const std::string name = spec.at("density").get<std::string>();
        std::function<double(double, double)> density;
        if (name == "uniform")
            density = [](double, double) { return 1.0; };
        else if (name == "gaussian")
            density = [](double x, double y) { return std::exp(-0.5 * (x * x + y * y)); };
        else
            throw validation_error("config: unknown density \"" + name +
                                   "\" (uniform, gaussian)");
        return grid_density(density, box, detail::int_field(spec, "nx", "measure"),
                            detail::int_field(spec, "ny", "measure"), name);
    }
    throw validation_error("config: unknown measure kind \"" + kind + "\"");
}

namespace detail {

struct CsvWriter {
    std::ostringstream out;

    CsvWriter(const nlohmann::json& config, const AtomicMeasure& m,
              const std::string& law, const std::string& columns) {
        out << "# " << tool_version << "\n";
        out << "# config " << config_hash(config) << "\n";
        out << "# measure " << m.label() << "  mu_T " << format17(m.total_mass())
            << "\n";
        out << "# law: " << law << "\n";
        out << columns << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out << (i ? "," : "") << cells[i];
        out << "\n";
    }
};

inline void write_artifact(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw validation_error("output: cannot open \"" + path + "\" for writing");
    f << content;
    if (!f.good())
        throw numerical_error("output: write to \"" + path + "\" failed");
}

inline std::vector<double> decreasing_list(const nlohmann::json& params,
                                           const std::string& key,
                                           const std::string& where) {
    auto xs = list_field(params, key, where);
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] < xs[i - 1]))
            throw validation_error("config: " + where + "." + key +
                                   " must be strictly decreasing");
    return xs;
}

inline std::string run_gamma_sweep(const nlohmann::json& config,
                                   const AtomicMeasure& m,
                                   const nlohmann::json& params) {
    require_keys(params, "parameters", {"k_list"});
    const auto ks = list_field(params, "k_list", "parameters");
    CsvWriter w(config, m,
                "gamma(k) is the top eigenvalue of the Birman-Schwinger "
                "operator at energy -k^2",
                "k,gamma");
    for (double k : ks) {
        const SpectralPoint sp = gamma_top(m, k);
        w.row({format17(k), format17(sp.gamma)});
    }
    return w.out.str();
}

inline std::string run_bound_state(const nlohmann::json& config,
                                   const AtomicMeasure& m,
                                   const nlohmann::json& params) {
    require_keys(params, "parameters", {"alpha_list"});
    const auto alphas = list_field(params, "alpha_list", "parameters");
    CsvWriter w(config, m,
                "lambda(alpha) ~ -C_mu exp(-4 pi/(alpha mu_T)) as alpha -> 0+",
                "alpha,k,lambda,lambda_asym,ratio");
    for (double alpha : alphas) {
        const BoundState bs = solve_bound_state(m, alpha);
        const double asym = lambda_asymptotic(m, alpha);
        w.row({format17(alpha), format17(bs.k_alpha), format17(bs.lambda),
               format17(asym), format17(bs.lambda / asym)});
    }
    return w.out.str();
}

inline std::string run_cmu(const nlohmann::json& config, const AtomicMeasure& m,
                           const nlohmann::json& params) {
    require_keys(params, "parameters", {});
    const BSMatrix R = assemble_R(m);
    const Eigen::VectorXd sw = R.weights.cwiseSqrt();
    const double r_form = sw.dot(R.entries * sw);
    const double c = c_mu(m);
    std::ostringstream out;
    out << "{\n";
    out << "  \"tool\": \"" << tool_version << "\",\n";
    out << "  \"config_hash\": \"" << config_hash(config) << "\",\n";
    out << "  \"measure\": \"" << m.label() << "\",\n";
    out << "  \"law\": \"C_mu = exp(4 pi (R 1,1) / mu_T^2)\",\n";
    out << "  \"mu_total\": " << format17(m.total_mass()) << ",\n";
    out << "  \"r_form\": " << format17(r_form) << ",\n";
    out << "  \"c_mu\": " << format17(c) << "\n";
    out << "}\n";
    return out.str();
}

inline std::string run_eigenfunction(const nlohmann::json& config,
                                     const AtomicMeasure& m,
                                     const nlohmann::json& params) {
    require_keys(params, "parameters", {"alpha", "nx", "ny"}, {"box"});
    const double alpha = number_field(params, "alpha", "parameters");
    const int nx = int_field(params, "nx", "parameters");
    const int ny = int_field(params, "ny", "parameters");
    const BoundState bs = solve_bound_state(m, alpha);
    Box box;
    if (params.contains("box")) {
        const auto& b = params.at("box");
        if (!b.is_array() || b.size() != 4)
            throw validation_error("config: parameters.box must be "
                                   "[xmin, ymin, xmax, ymax]");
        box = Box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                  b[3].get<double>()};
    } else {
        // default: square capturing the e^{-k|x|} tail around the support
        const Box sb = m.bounding_box();
        const double cx = 0.5 * (sb.xmin + sb.xmax);
        const double cy = 0.5 * (sb.ymin + sb.ymax);
        const double half = 8.0 / bs.k_alpha + m.support_diameter();
        box = Box{cx - half, cy - half, cx + half, cy + half};
    }
    const FieldGrid fg = eigenfunction_grid(m, bs, box, nx, ny);
    CsvWriter w(config, m,
                "f_alpha(x) = (k/2 pi) sum_j w_j phi_j K0(k|x - x_j|), "
                "the bound-state profile at k = " +
                    format17(bs.k_alpha),
                "# x y f");
    const double dx = (box.xmax - box.xmin) / nx;
    const double dy = (box.ymax - box.ymin) / ny;
    for (int iy = 0; iy < ny; ++iy) {
        const double y = box.ymin + (iy + 0.5) * dy;
        for (int ix = 0; ix < nx; ++ix) {
            const double x = box.xmin + (ix + 0.5) * dx;
            w.row({format17(x), format17(y), format17(fg.values(iy, ix))});
        }
    }
    return w.out.str();
}

inline std::string run_kato_check(const nlohmann::json& config,
                                  const AtomicMeasure& m,
                                  const nlohmann::json& params) {
    require_keys(params, "parameters", {"eps_list"});
    const auto eps = decreasing_list(params, "eps_list", "parameters");
    const auto rows = kato_diagnostic(m, eps);
    CsvWriter w(config, m,
                "Kato bound(eps) = sup_x of the |ln| mass within distance eps; "
                "decay certifies admissibility",
                "eps,kato_sup");
    for (const auto& [e, v] : rows)
        w.row({format17(e), format17(v)});
    return w.out.str();
}

inline std::string run_perturbation(const nlohmann::json& config,
                                    const AtomicMeasure& m,
                                    const nlohmann::json& params) {
    require_keys(params, "parameters", {"k_list"});
    const auto ks = decreasing_list(params, "k_list", "parameters");
    const auto rows = perturbation_report(m, ks);
    CsvWriter w(config, m,
                "omega(k) = -2 pi gamma(k)/(mu_T ln k) -> 1 and "
                "(omega - 1) ln k -> -(2 pi/mu_T^2)(R 1,1)",
                "k,omega,gap,dev,omega_scaled,dev_scaled");
    for (const auto& r : rows)
        w.row({format17(r.k), format17(r.omega), format17(r.gap), format17(r.dev),
               format17(r.omega_scaled), format17(r.dev_scaled)});
    return w.out.str();
}

inline std::string run_convergence(const nlohmann::json& config,
                                   const AtomicMeasure& m,
                                   const nlohmann::json& params) {
    require_keys(params, "parameters", {"k", "levels"});
    const double k = number_field(params, "k", "parameters");
    const int levels = int_field(params, "levels", "parameters");
    if (levels < 2)
        throw validation_error("config: parameters.levels must be at least 2");
    CsvWriter w(config, m,
                "observed order = log2(|d_n / d_2n|) for d_n = "
                "gamma_n - gamma_{n/2} at fixed k",
                "n,gamma,delta,order");
    AtomicMeasure cur = m;
    double prev_gamma = 0.0, prev_delta = 0.0;
    for (int level = 0; level < levels; ++level) {
        if (level > 0)
            cur = refine(cur);
        const double g = gamma_top(cur, k).gamma;
        std::string delta, order;
        if (level > 0) {
            const double d = g - prev_gamma;
            delta = format17(d);
            if (level > 1)
                order = format17(std::log2(std::abs(prev_delta / d)));
            prev_delta = d;
        }
        w.row({std::to_string(cur.size()), format17(g), delta, order});
        prev_gamma = g;
    }
    return w.out.str();
}

inline std::string run_norm_limit(const nlohmann::json& config,
                                  const AtomicMeasure& m,
                                  const nlohmann::json& params) {
    require_keys(params, "parameters", {"alpha_list"});
    const auto alphas = decreasing_list(params, "alpha_list", "parameters");
    const auto rows = norm_limit_report(m, alphas);
    CsvWriter w(config, m,
                "||f_alpha|| -> mu_T/(2 sqrt(pi)) as alpha -> 0+",
                "alpha,k,f_norm,limit,deviation");
    for (const auto& r : rows)
        w.row({format17(r.alpha), format17(r.k), format17(r.f_norm),
               format17(r.limit), format17(r.deviation)});
    return w.out.str();
}

} // namespace detail

// Validates the config, executes its command, writes the artifact. Throws
// validation_error for schema/input problems and numerical_error (or
// spectral_failure) for solver breakdowns; returns the artifact path.
inline std::string run_config(const nlohmann::json& config) {
    detail::require_keys(config, "config", {"measure", "command", "output"},
                         {"parameters"});
    if (!config.at("command").is_string())
        throw validation_error("config: command must be a string");
    const std::string name = config.at("command").get<std::string>();
    const auto it = command_table().find(name);
    if (it == command_table().end())
        throw validation_error("config: unknown command \"" + name + "\"");
    const Command cmd = it->second;

    const auto& output = config.at("output");
    detail::require_keys(output, "output", {"path", "format"});
    if (!output.at("path").is_string() || !output.at("format").is_string())
        throw validation_error("config: output.path and output.format must be strings");
    const std::string path = output.at("path").get<std::string>();
    const std::string format = output.at("format").get<std::string>();
    if (format != command_format(cmd))
        throw validation_error("config: command \"" + name + "\" writes " +
                               command_format(cmd) + ", not " + format);

    const nlohmann::json params =
        config.contains("parameters") ? config.at("parameters")
                                      : nlohmann::json::object();
    const AtomicMeasure m = build_measure(config.at("measure"));

    std::string content;
    switch (cmd) {
    case Command::gamma_sweep:
        content = detail::run_gamma_sweep(config, m, params);
        break;
    case Command::bound_state:
        content = detail::run_bound_state(config, m, params);
        break;
    case Command::cmu:
        content = detail::run_cmu(config, m, params);
        break;
    case Command::eigenfunction:
        content = detail::run_eigenfunction(config, m, params);
        break;
    case Command::kato_check:
        content = detail::run_kato_check(config, m, params);
        break;
    case Command::perturbation:
        content = detail::run_perturbation(config, m, params);
        break;
    case Command::convergence:
        content = detail::run_convergence(config, m, params);
        break;
    case Command::norm_limit:
        content = detail::run_norm_limit(config, m, params);
        break;
    }
    detail::write_artifact(path, content);
    return path;
}

// Builds the config object the minimal flag form stands for, so a flag run
// and its config-file equivalent hash identically.
inline nlohmann::json config_from_flags(const std::string& measure,
                                        const std::string& command,
                                        const std::string& alpha_csv,
                                        const std::string& k_csv,
                                        const std::string& out_path) {
    auto split_numbers = [](const std::string& csv) {
        std::vector<double> xs;
        std::stringstream ss(csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                throw validation_error("flags: \"" + tok + "\" is not a number");
            }
            if (used != tok.size())
                throw validation_error("flags: \"" + tok + "\" is not a number");
            xs.push_back(v);
        }
        if (xs.empty())
            throw validation_error("flags: empty number list");
        return xs;
    };

    nlohmann::json cfg;
    // measure shorthand: circle:R:N or segment:ax:ay:bx:by:N
    {
        std::vector<std::string> parts;
        std::stringstream ss(measure);
        std::string tok;
        while (std::getline(ss, tok, ':'))
            parts.push_back(tok);
        try {
            if (parts.size() == 3 && parts[0] == "circle") {
                cfg["measure"] = {{"kind", "circle"},
                                  {"r", std::stod(parts[1])},
                                  {"n", std::stoi(parts[2])}};
            } else if (parts.size() == 6 && parts[0] == "segment") {
                cfg["measure"] = {{"kind", "segment"},
                                  {"ax", std::stod(parts[1])},
                                  {"ay", std::stod(parts[2])},
                                  {"bx", std::stod(parts[3])},
                                  {"by", std::stod(parts[4])},
                                  {"n", std::stoi(parts[5])}};
            } else {
                throw std::invalid_argument("shape");
            }
        } catch (const std::exception&) {
            throw validation_error(
                "flags: --measure wants circle:R:N or segment:ax:ay:bx:by:N");
        }
    }
    const auto it = command_table().find(command);
    if (it == command_table().end())
        throw validation_error("flags: unknown command \"" + command + "\"");
    const Command cmd = it->second;

    nlohmann::json params = nlohmann::json::object();
    switch (cmd) {
    case Command::gamma_sweep:
    case Command::perturbation:
        if (k_csv.empty())
            throw validation_error("flags: command needs --k");
        params["k_list"] = split_numbers(k_csv);
        break;
    case Command::bound_state:
    case Command::norm_limit:
        if (alpha_csv.empty())
            throw validation_error("flags: command needs --alpha");
        params["alpha_list"] = split_numbers(alpha_csv);
        break;
    case Command::kato_check:
        if (k_csv.empty())
            throw validation_error("flags: kato_check reads its eps list from --k");
        params["eps_list"] = split_numbers(k_csv);
        break;
    case Command::convergence: {
        if (k_csv.empty())
            throw validation_error("flags: command needs --k");
        const auto ks = split_numbers(k_csv);
        if (ks.size() != 1)
            throw validation_error("flags: convergence wants a single --k");
        params["k"] = ks[0];
        params["levels"] = 4;
        break;
    }
    case Command::eigenfunction: {
        if (alpha_csv.empty())
            throw validation_error("flags: command needs --alpha");
        const auto as = split_numbers(alpha_csv);
        if (as.size() != 1)
            throw validation_error("flags: eigenfunction wants a single --alpha");
        params["alpha"] = as[0];
        params["nx"] = 64;
        params["ny"] = 64;
        break;
    }
    case Command::cmu:
        break;
    }
    cfg["command"] = command;
    cfg["parameters"] = params;
    cfg["output"] = {{"path", out_path}, {"format", command_format(cmd)}};
    return cfg;
}

// File-level entry point used by the binary: maps outcomes onto the exit
// code contract (0 ok, 2 validation, 3 numerical).
inline int run_config_file(const std::string& config_path, std::ostream& err) {
    nlohmann::json config;
    try {
        std::ifstream f(config_path, std::ios::binary);
        if (!f) {
            err << "error: cannot read config \"" << config_path << "\"\n";
            return 2;
        }
        config = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        err << "error: config parse: " << e.what() << "\n";
        return 2;
    }
    try {
        run_config(config);
        return 0;
    } catch (const validation_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

inline int run_config_json(const nlohmann::json& config, std::ostream& err) {
    try {
        run_config(config);
        return 0;
    } catch (const validation_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace bslab
