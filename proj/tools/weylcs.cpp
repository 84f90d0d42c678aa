// Command-line front end: spectrum, weyl-curve, symbol-check, frame-check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "weylcs/weylcs.hpp"

namespace {

using namespace weylcs;

// Every recognised key with its default. Config files and flags share these names.
const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d{
        {"kind", "euclidean"},  {"dim", "1"},           {"box", ""},           {"h", "0.01"},
        {"lambda", ""},         {"lambda-min", "100"},  {"lambda-max", "10000"}, {"lambda-count", "25"},
        {"lambda-spacing", "log"}, {"alpha", "0.3333333333333333"}, {"window", "cosine"}, {"eps", "0.2"},
        {"source", "exact"},    {"fit-min", ""},        {"fit-max", ""},       {"dense-limit", "5000"},
        {"samples", "5"},       {"xi-max", "5"},        {"threads", "1"},      {"seed", "1"},
    };
    return d;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(number) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        if (!defaults().count(key)) throw ConfigError(path + ":" + std::to_string(number) + ": unknown key '" + key + "'");
        out[key] = trim(t.substr(eq + 1));
    }
    return out;
}

double parse_number(const std::string& key, const std::string& text) {
    if (text == "pi") return kPi;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + text + "' is not a number");
    }
    if (used != text.size() || !std::isfinite(v)) throw ConfigError(key + ": '" + text + "' is not a number");
    return v;
}

double positive(const std::string& key, const std::string& text) {
    const double v = parse_number(key, text);
    if (!(v > 0.0)) throw ConfigError(key + " must be positive, got " + text);
    return v;
}

std::size_t count_value(const std::string& key, const std::string& text) {
    const double v = parse_number(key, text);
    if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError(key + " must be a positive integer, got " + text);
    return static_cast<std::size_t>(v);
}

struct ExperimentConfig {
    std::map<std::string, std::string> raw;
    OperatorKind kind = OperatorKind::euclidean;
    std::size_t dim = 1;
    Box box;
    double h = 0.01;
    std::optional<double> lambda;
    double lambda_min = 100, lambda_max = 1e4;
    std::size_t lambda_count = 25;
    LambdaSpacing spacing = LambdaSpacing::log;
    double alpha = 1.0 / 3.0;
    WindowShape window = WindowShape::cosine;
    double eps = 0.2;
    bool exact_source = true;
    double fit_min = 0, fit_max = 0;
    std::size_t dense_limit = kDefaultDenseLimit;
    std::size_t samples = 5;
    double xi_max = 5;
    unsigned threads = 1;
    std::uint64_t seed = 1;
};

ExperimentConfig resolve(std::map<std::string, std::string> raw) {
    for (const auto& [k, v] : defaults())
        if (!raw.count(k)) raw[k] = v;
    ExperimentConfig c;
    c.kind = parse_operator_kind(raw["kind"]);
    c.dim = count_value("dim", raw["dim"]);
    if (raw["box"].empty()) {
        std::string b;
        for (std::size_t a = 0; a < c.dim; ++a) b += (a ? " 0 pi" : "0 pi");
        raw["box"] = b;
    }
    {
        std::string text = raw["box"];
        std::replace(text.begin(), text.end(), ',', ' ');
        std::istringstream is(text);
        std::vector<double> v;
        for (std::string tok; is >> tok;) v.push_back(parse_number("box", tok));
        if (v.size() != 2 * c.dim)
            throw ConfigError("box needs " + std::to_string(2 * c.dim) + " numbers (lo hi per axis)");
        for (std::size_t a = 0; a < c.dim; ++a) {
            if (!(v[2 * a + 1] > v[2 * a])) throw ConfigError("box axis " + std::to_string(a) + " is empty");
            c.box.push_back({v[2 * a], v[2 * a + 1]});
        }
    }
    c.h = positive("h", raw["h"]);
    if (!raw["lambda"].empty()) {
        c.lambda = parse_number("lambda", raw["lambda"]);
        if (*c.lambda < 0.0) throw ConfigError("lambda must be nonnegative");
    }
    c.lambda_min = positive("lambda-min", raw["lambda-min"]);
    c.lambda_max = positive("lambda-max", raw["lambda-max"]);
    if (c.lambda_max < c.lambda_min) throw ConfigError("lambda-max must be at least lambda-min");
    c.lambda_count = count_value("lambda-count", raw["lambda-count"]);
    c.spacing = parse_lambda_spacing(raw["lambda-spacing"]);
    c.alpha = positive("alpha", raw["alpha"]);
    c.window = parse_window_shape(raw["window"]);
    c.eps = positive("eps", raw["eps"]);
    if (raw["source"] != "exact" && raw["source"] != "discrete")
        throw ConfigError("source must be exact or discrete, got '" + raw["source"] + "'");
    c.exact_source = raw["source"] == "exact";
    c.fit_min = raw["fit-min"].empty() ? c.lambda_min : positive("fit-min", raw["fit-min"]);
    c.fit_max = raw["fit-max"].empty() ? c.lambda_max : positive("fit-max", raw["fit-max"]);
    c.dense_limit = count_value("dense-limit", raw["dense-limit"]);
    c.samples = count_value("samples", raw["samples"]);
    c.xi_max = parse_number("xi-max", raw["xi-max"]);
    if (c.xi_max < 0.0) throw ConfigError("xi-max must be nonnegative");
    c.threads = static_cast<unsigned>(count_value("threads", raw["threads"]));
    const double seed = parse_number("seed", raw["seed"]);
    if (seed < 0.0 || seed != std::floor(seed)) throw ConfigError("seed must be a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(seed);
    c.raw = std::move(raw);
    return c;
}

std::vector<std::string> header(const std::string& command, const ExperimentConfig& c) {
    std::vector<std::string> lines{"weylcs " + std::string(kVersion), "command=" + command};
    for (const auto& [k, v] : c.raw) lines.push_back(k + "=" + v);
    return lines;
}

void write_header(std::ostream& os, const std::vector<std::string>& lines) {
    for (const auto& l : lines) os << "# " << l << '\n';
}

void warn_resolution(const ExperimentConfig& c, double lam) {
    if (lam * c.h * c.h > 1.0)
        std::cerr << "warning: lambda " << lam << " exceeds the resolution bound 1/h^2 = " << 1.0 / (c.h * c.h)
                  << "; discrete eigenvalues are unreliable there\n";
}

Spectrum discrete_spectrum(const DiscreteOperator& op, double lam, const ExperimentConfig& c) {
    if (lam <= 0.0) return {{}, lam, true};
    if (op.size() <= c.dense_limit) return truncate(dense_spectrum(op, c.dense_limit), lam);
    SliceOptions opt;
    opt.seed = c.seed;
    return spectrum_below(op, lam, opt);
}

void cmd_spectrum(const ExperimentConfig& c, std::ostream& os) {
    const double lam = c.lambda.value_or(c.lambda_max);
    const auto dom = rectangle_domain(c.box, c.h);
    const auto op = assemble(dom, c.kind);
    warn_resolution(c, lam);
    const auto spec = discrete_spectrum(op, lam, c);
    write_header(os, header("spectrum", c));
    write_spectrum(os, spec, c.kind, c.h);
}

void cmd_weyl_curve(const ExperimentConfig& c, std::ostream& os) {
    const auto lambdas = lambda_grid(c.lambda_min, c.lambda_max, c.lambda_count, c.spacing);
    const auto dom = rectangle_domain(c.box, c.h);
    Spectrum spec;
    std::ostringstream domain;
    for (const auto& iv : c.box) domain << (domain.tellp() > 0 ? "x" : "") << "(" << iv.lo << "," << iv.hi << ")";
    if (c.exact_source) {
        if (c.kind == OperatorKind::hyperbolic && c.dim > 1)
            throw ConfigError("no exact spectrum for the hyperbolic operator in dimension > 1; use source=discrete");
        std::vector<double> lengths;
        for (const auto& iv : c.box) lengths.push_back(iv.length());
        spec = exact_spectrum_box(lengths, c.lambda_max);
    } else {
        warn_resolution(c, c.lambda_max);
        spec = discrete_spectrum(assemble(dom, c.kind), c.lambda_max, c);
    }
    CurveMeta meta;
    meta.kind = c.kind;
    meta.dim = c.dim;
    meta.domain = domain.str();
    meta.h = c.exact_source ? 0.0 : c.h;
    CurveOptions opt;
    opt.alpha = c.alpha;
    opt.window = make_window(c.window, c.dim);
    opt.threads = c.threads;
    const auto curve = build_curve(spec, reduced_leading(c.kind, dom), lambdas, meta, opt);

    std::optional<ExponentFit> fit;
    std::string fit_problem;
    try {
        fit = fit_remainder_exponent(curve, c.fit_min, c.fit_max);
    } catch (const ConfigError& e) {
        fit_problem = e.what();
    }
    write_curve(os, curve, header("weyl-curve", c), fit);
    if (!fit) os << "# fit unavailable: " << fit_problem << '\n';
}

struct SymbolSample {
    std::vector<double> xi, y;
};

// Centres are snapped to nodes of the coarse grid and kept more than a window support
// away from the boundary.
std::vector<SymbolSample> symbol_samples(const ExperimentConfig& c, const Window& w) {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<SymbolSample> out;
    for (std::size_t s = 0; s < c.samples; ++s) {
        SymbolSample p;
        for (std::size_t a = 0; a < c.dim; ++a) {
            const double reach = w.factors()[a].support();
            const double lo = c.box[a].lo + reach, hi = c.box[a].hi - reach;
            if (!(hi >= lo)) throw ConfigError("window support does not fit inside the box");
            const double first = std::floor((lo - c.box[a].lo) / c.h + 1e-9) + 1.0;
            const double last = std::ceil((hi - c.box[a].lo) / c.h - 1e-9) - 1.0;
            if (last < first) throw ConfigError("no grid node keeps the window inside the box");
            const double k = first + std::floor(unit(rng) * (last - first + 1.0));
            p.y.push_back(c.box[a].lo + std::min(k, last) * c.h);
            p.xi.push_back(c.xi_max * (2.0 * unit(rng) - 1.0));
        }
        out.push_back(std::move(p));
    }
    return out;
}

struct SymbolRow {
    double exact = 0, coarse = 0, fine = 0;
    bool truncated = false;
};

std::vector<SymbolRow> symbol_rows(const ExperimentConfig& c, const Window& w, const std::vector<SymbolSample>& pts) {
    const auto coarse = assemble(rectangle_domain(c.box, c.h), c.kind);
    const auto fine = assemble(rectangle_domain(c.box, 0.5 * c.h), c.kind);
    std::vector<SymbolRow> rows(pts.size());
    parallel_for(pts.size(), c.threads, [&](std::size_t i) {
        const auto a = symbol(w, coarse, pts[i].xi, pts[i].y);
        const auto b = symbol(w, fine, pts[i].xi, pts[i].y);
        rows[i] = {analytic_symbol(c.kind, w, pts[i].xi, pts[i].y), a.value, b.value, a.truncated || b.truncated};
    });
    return rows;
}

std::string join(const std::vector<double>& v) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
    return os.str();
}

void cmd_symbol_check(const ExperimentConfig& c, std::ostream& os) {
    const Window w = scale(make_window(c.window, c.dim), c.eps);
    const auto pts = symbol_samples(c, w);
    const auto rows = symbol_rows(c, w, pts);
    write_header(os, header("symbol-check", c));
    os << "xi,y,analytic,symbol_h,symbol_h2,error_h,error_h2,ratio,truncated\n" << std::setprecision(17);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double e1 = std::abs(rows[i].coarse - rows[i].exact), e2 = std::abs(rows[i].fine - rows[i].exact);
        os << join(pts[i].xi) << ',' << join(pts[i].y) << ',' << rows[i].exact << ',' << rows[i].coarse << ','
           << rows[i].fine << ',' << e1 << ',' << e2 << ',' << (e2 > 0 ? e1 / e2 : 0.0) << ','
           << (rows[i].truncated ? 1 : 0) << '\n';
    }
}

void cmd_frame_check(const ExperimentConfig& c, std::ostream& os) {
    const Window w = scale(make_window(c.window, c.dim), c.eps);
    const auto frame = build_frame(c.box, c.h, w);
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> g;

    double parseval = 0.0, inversion = 0.0;
    for (std::size_t s = 0; s < c.samples; ++s) {
        std::vector<Complex> f(frame.size());
        for (auto& v : f) v = Complex(g(rng), g(rng));
        const auto F = forward(frame, f);
        const double a = grid_norm_squared(frame, f);
        parseval = std::max(parseval, std::abs(norm_squared(frame, F) - a) / a);
        const auto back = adjoint(frame, F);
        double diff = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) diff = std::max(diff, std::abs(back[i] - f[i]));
        inversion = std::max(inversion, diff);
    }

    const auto op = assemble(rectangle_domain(c.box, c.h), c.kind);
    if (op.size() > c.dense_limit) throw ConfigError("trace check needs a dense spectrum; raise dense-limit or h");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix().to_dense());
    const Eigen::VectorXd ev = es.eigenvalues();
    const double lam = c.lambda.value_or(ev(ev.size() / 2));
    const Eigen::VectorXd weights = (lam - ev.array()).max(0.0).matrix();
    Eigen::MatrixXd t = es.eigenvectors() * weights.asDiagonal() * es.eigenvectors().transpose();
    t = (0.5 * (t + t.transpose())).eval();
    const double trace = weights.sum();
    const double via = trace_via_frame(frame, embed(frame, op, t));

    const auto pts = symbol_samples(c, w);
    const auto rows = symbol_rows(c, w, pts);

    write_header(os, header("frame-check", c));
    os << std::setprecision(17);
    os << "nodes " << frame.size() << "\nlattice_sum " << frame.lattice_sum() << "\nparseval_defect " << parseval
       << "\ninversion_defect " << inversion << "\ntrace_lambda " << lam << "\ntrace_exact " << trace
       << "\ntrace_frame " << via << "\ntrace_defect " << (trace > 0 ? std::abs(via - trace) / trace : std::abs(via))
       << '\n';
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double e1 = std::abs(rows[i].coarse - rows[i].exact), e2 = std::abs(rows[i].fine - rows[i].exact);
        os << "symbol xi=" << join(pts[i].xi) << " y=" << join(pts[i].y) << " analytic=" << rows[i].exact
           << " error_h=" << e1 << " error_h2=" << e2 << " ratio=" << (e2 > 0 ? e1 / e2 : 0.0)
           << " truncated=" << (rows[i].truncated ? 1 : 0) << '\n';
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Coherent-state Weyl law experiments"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_version_flag("--version", std::string(kVersion));
    std::string config_path, out_path;
    std::map<std::string, std::string> flags;
    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--out", out_path, "output file (default: standard output)");
    std::map<std::string, CLI::Option*> options;
    for (const auto& [key, value] : defaults()) options[key] = app.add_option("--" + key, flags[key]);
    const std::vector<std::string> names{"spectrum", "weyl-curve", "symbol-check", "frame-check"};
    for (const auto& n : names) app.add_subcommand(n)->fallthrough();
    app.require_subcommand(1);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    std::map<std::string, std::string> raw;
    if (!config_path.empty()) raw = read_config(config_path);
    for (const auto& [key, opt] : options)
        if (opt->count() > 0) raw[key] = flags[key];
    const auto cfg = resolve(raw);

    std::ostringstream buffer;
    if (command == "spectrum") cmd_spectrum(cfg, buffer);
    else if (command == "weyl-curve") cmd_weyl_curve(cfg, buffer);
    else if (command == "symbol-check") cmd_symbol_check(cfg, buffer);
    else cmd_frame_check(cfg, buffer);

    if (out_path.empty()) {
        std::cout << buffer.str();
        return 0;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + out_path + "'");
    out << buffer.str();
    if (!out) throw ConfigError("failed writing '" + out_path + "'");
    return 0;
}

void check_output_path(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) != "--out") continue;
        const auto parent = std::filesystem::path(argv[i + 1]).parent_path();
        if (!parent.empty() && !std::filesystem::is_directory(parent))
            throw ConfigError("output directory '" + parent.string() + "' does not exist");
    }
}

}  // namespace

int main(int argc, char** argv) {
    try {
        check_output_path(argc, argv);
        return run(argc, argv);
    } catch (const WrapError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const CertificationError& e) {
        std::cerr << "certification failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
