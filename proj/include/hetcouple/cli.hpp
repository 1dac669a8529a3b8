#pragma once
/**
 * @file cli.hpp
 * @brief The reference / couple / sweep / verify commands and their file output.
 *
 * Every CSV and plot script starts with a `# config_hash=<hex>` line; meta.json
 * carries the same hash as its first key. Numbers are written with
 * 17 significant digits and no timestamps, so identical configurations give
 * byte-identical files.
 */

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "hetcouple/analysis.hpp"
#include "hetcouple/scenario.hpp"
#include "hetcouple/verification.hpp"
#include "json.hpp"

namespace hetcouple::cli {

enum ExitCode : int { Ok = 0, VerifyFailed = 1, NotConverged = 2, Usage = 64 };

/// Failure writing an output file.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

namespace detail {

inline std::ofstream open(const std::filesystem::path& p, const std::string& hash) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write '" + p.string() + "'");
    f << "# config_hash=" << hash << "\n";
    return f;
}

inline void finish(std::ofstream& f, const std::filesystem::path& p) {
    f.flush();
    if (!f) throw IoError("write failed for '" + p.string() + "'");
}

inline std::filesystem::path prepare_dir(const RunConfig& c) {
    std::filesystem::path dir(c.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + c.out + "': " + ec.message());
    return dir;
}

inline int worker_count(const RunConfig& c) {
    if (c.jobs > 0) return c.jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

inline nlohmann::ordered_json base_meta(const RunConfig& c, const std::string& command) {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash(c);
    j["command"] = command;
    j["config"] = c.entries;
    j["defaults_used"] = c.defaults_used;
    return j;
}

inline nlohmann::ordered_json grid_meta(const Domain2D& d) {
    const Grid2D& g = d.grid();
    return {{"nx", g.nx}, {"nz", g.nz}, {"hx", g.hx}, {"hz", g.hz}, {"active_nodes", g.active_count()}};
}

inline void write_meta(const std::filesystem::path& dir, const nlohmann::ordered_json& j) {
    const auto p = dir / "meta.json";
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write '" + p.string() + "'");
    f << j.dump(2) << "\n";
    finish(f, p);
}

inline void write_text(const std::filesystem::path& p, const std::string& hash, const std::string& body) {
    auto f = open(p, hash);
    f << body;
    finish(f, p);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV writers

inline void write_field_csv(const std::filesystem::path& p, const Field2D& u, const std::string& hash) {
    auto f = detail::open(p, hash);
    f << "x,z,value\n";
    const Grid2D& g = u.grid();
    for (int j = 0; j <= g.nz; ++j)
        for (int i = 0; i <= g.nx; ++i)
            if (g.node_active(i, j)) f << fmt(g.x(i)) << ',' << fmt(g.z(j)) << ',' << fmt(u.at(i, j)) << '\n';
    detail::finish(f, p);
}

inline void write_1d_csv(const std::filesystem::path& p, const Field1D& u, const std::string& hash) {
    auto f = detail::open(p, hash);
    f << "x,value\n";
    for (int i = 0; i < u.grid.nodes(); ++i) f << fmt(u.grid.x(i)) << ',' << fmt(u[static_cast<std::size_t>(i)]) << '\n';
    detail::finish(f, p);
}

inline void write_trace_rows(std::ostream& f, const IterationTrace& t, const std::string& prefix = {}) {
    for (const auto& r : t.rows)
        f << prefix << r.iter << ',' << fmt(r.diff1) << ',' << fmt(r.diff2) << ',' << fmt(r.alpha) << ','
          << fmt(r.value_residual) << ',' << fmt(r.flux_residual) << '\n';
}

inline void write_trace_csv(const std::filesystem::path& p, const IterationTrace& t, const std::string& hash) {
    auto f = detail::open(p, hash);
    f << "iter,diff1,diff2,alpha,res_value,res_flux\n";
    write_trace_rows(f, t);
    detail::finish(f, p);
}

inline std::string csv_text(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
    return s;
}

inline void write_report_csv(const std::filesystem::path& p, const ErrorReport& rep, const std::string& hash) {
    auto f = detail::open(p, hash);
    f << "sweep_param,sweep_value,L0,rel_h1,rel_l2,rel_linf,bound,delta,epsilon,epsilon_geom,iterations,lambda,status\n";
    for (const auto& r : rep.rows) {
        f << r.sweep_param << ',' << fmt(r.sweep_value) << ',' << fmt(r.L0) << ',' << fmt(r.rel_h1) << ','
          << fmt(r.rel_l2) << ',' << fmt(r.rel_linf) << ',' << (r.bound ? fmt(*r.bound) : "out_of_validity") << ','
          << (r.delta ? fmt(*r.delta) : "inf") << ',' << fmt(r.epsilon) << ',' << fmt(r.epsilon_geom) << ','
          << r.iterations << ',' << fmt(r.lambda) << ',' << (r.ok() ? "ok" : csv_text(r.failure)) << '\n';
    }
    detail::finish(f, p);
}

// ---------------------------------------------------------------------------
// gnuplot scripts

inline std::string plot_field(const std::string& csv, const std::string& title) {
    return "set datafile separator ','\nset title '" + title +
           "'\nset xlabel 'x'\nset ylabel 'z'\nset view map\nset palette rgb 33,13,10\n"
           "splot '" + csv + "' every ::1 using 1:2:3 with points pointtype 5 pointsize 0.3 palette notitle\n";
}

inline std::string plot_convergence(const std::string& csv) {
    return "set datafile separator ','\nset logscale y\nset format y '%.0e'\nset xlabel 'iteration'\n"
           "set ylabel 'max |u^{k+1} - u^k|'\nplot '" + csv + "' every ::1 using 1:2 with linespoints title '1-D', \\\n"
           "     '' every ::1 using 1:3 with linespoints title '2-D'\n";
}

inline std::string plot_interface_sweep(const std::string& csv) {
    return "set datafile separator ','\nset logscale y\nset format y '%.0e'\nset xlabel 'L_0'\n"
           "set ylabel 'relative H^1 error'\nset key top left\n"
           "plot '" + csv + "' every ::1 using 3:4 with linespoints lc rgb 'black' title 'coupled vs reference', \\\n"
           "     '' every ::1 using 3:($7 > 0 ? $7 : 1/0) with lines lc rgb 'red' title 'bound'\n";
}

inline std::string plot_epsilon_sweep(const std::string& csv) {
    return "set datafile separator ','\nset logscale xy\nset format y '%.0e'\nset xlabel 'epsilon = H/L'\n"
           "set ylabel 'relative H^1 error'\nplot '" + csv + "' every ::1 using 2:4 with linespoints title 'error'\n";
}

inline std::string plot_lambda_sweep(const std::string& csv, const std::vector<LambdaRun>& runs) {
    std::string s = "set datafile separator ','\nset logscale y\nset format y '%.0e'\nset xlabel 'iteration'\n"
                    "set ylabel 'max |u^{k+1} - u^k|'\nplot ";
    for (std::size_t k = 0; k < runs.size(); ++k) {
        char title[64];
        std::snprintf(title, sizeof title, "lambda = %.4g%s", runs[k].lambda, runs[k].is_optimal ? " (opt)" : "");
        s += (k ? ", \\\n     '" : "'") + csv + "' every ::1 using ($1 == " + std::to_string(k) +
             " ? $3 : 1/0):(max($4,$5)) with linespoints title '" + title + "'";
    }
    return "max(a,b) = a > b ? a : b\n" + s + "\n";
}

// ---------------------------------------------------------------------------
// commands

inline int cmd_reference(const RunConfig& c, std::ostream& log) {
    const auto dir = detail::prepare_dir(c);
    const std::string hash = config_hash(c);
    auto dom = std::make_shared<const Domain2D>(build_domain(c));
    const double g1 = c.gamma1, g2 = c.gamma2;
    const Field2D u = solve_reference(
        dom, build_forcing(c, c.H), [g1](double) { return g1; }, [g2](double) { return g2; }, c.kappa);
    write_field_csv(dir / "field.csv", u, hash);
    detail::write_text(dir / "reference.plt", hash, plot_field("field.csv", "reference solution"));
    auto meta = detail::base_meta(c, "reference");
    meta["grid"] = detail::grid_meta(*dom);
    detail::write_meta(dir, meta);
    const auto n = norms(u);
    log << "reference solved on " << dom->grid().active_count() << " nodes, max |u| = " << n.linf << "\n";
    return Ok;
}

inline int cmd_couple(const RunConfig& c, std::ostream& log) {
    const auto dir = detail::prepare_dir(c);
    const std::string hash = config_hash(c);
    const CouplingConfig cc = build_coupling(c);
    CoupledSolution s;
    int code = Ok;
    try {
        s = schwarz_solve(cc);
    } catch (const NonConvergence& nc) {
        s = nc.partial();
        code = NotConverged;
        log << "error: " << nc.what() << "\n";
    }
    write_1d_csv(dir / "u1.csv", s.u1, hash);
    write_field_csv(dir / "u2.csv", s.u2, hash);
    write_trace_csv(dir / "trace.csv", s.trace, hash);
    detail::write_text(dir / "convergence.plt", hash, plot_convergence("trace.csv"));
    auto meta = detail::base_meta(c, "couple");
    meta["grid"] = detail::grid_meta(cc.split.full);
    meta["lambda"] = cc.lambda;
    meta["lambda_opt"] = lambda_opt(cc.kappa, cc.H(), cc.L0()).value;
    meta["contraction_ratio"] = contraction_ratio(cc.lambda, cc.kappa, cc.H(), cc.L0());
    meta["iterations"] = s.trace.iterations();
    meta["converged"] = s.trace.converged();
    if (code == Ok) {
        const auto r = check_constraints(s);
        meta["constraint_value_residual"] = r.value;
        meta["constraint_flux_residual"] = r.flux;
    }
    detail::write_meta(dir, meta);
    log << "lambda = " << cc.lambda << ", " << s.trace.iterations() << " iterations, "
        << (s.trace.converged() ? "converged" : "not converged") << "\n";
    return code;
}

inline int cmd_sweep(const RunConfig& c, std::ostream& log) {
    if (c.sweep == SweepKind::None) throw ConfigError("sweep needs sweep = interface, epsilon or lambda");
    if (c.sweep_values.empty()) throw ConfigError("sweep_values is empty");
    const auto dir = detail::prepare_dir(c);
    const std::string hash = config_hash(c);
    const int jobs = detail::worker_count(c);
    auto meta = detail::base_meta(c, "sweep");
    meta["grid"] = detail::grid_meta(build_domain(c));

    if (c.sweep == SweepKind::Lambda) {
        const auto runs = sweep_lambda(build_coupling(c), c.sweep_values, jobs);
        const auto p = dir / "lambda_traces.csv";
        auto f = detail::open(p, hash);
        f << "run,lambda,iter,diff1,diff2,alpha,res_value,res_flux\n";
        std::size_t ok = 0;
        nlohmann::ordered_json jr = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < runs.size(); ++k) {
            write_trace_rows(f, runs[k].trace, std::to_string(k) + "," + fmt(runs[k].lambda) + ",");
            ok += runs[k].failure.empty();
            jr.push_back({{"lambda", runs[k].lambda},
                          {"optimal", runs[k].is_optimal},
                          {"predicted_ratio", runs[k].predicted_ratio},
                          {"iterations", runs[k].trace.iterations()},
                          {"status", runs[k].failure.empty() ? "ok" : runs[k].failure}});
        }
        detail::finish(f, p);
        detail::write_text(dir / "lambda_sweep.plt", hash, plot_lambda_sweep("lambda_traces.csv", runs));
        meta["runs"] = jr;
        detail::write_meta(dir, meta);
        log << ok << " of " << runs.size() << " lambda runs converged\n";
        return ok > 0 ? Ok : NotConverged;
    }

    SweepOptions o;
    o.L1 = c.L1;
    o.lambda = c.lambda;
    o.length = c.length();
    o.jobs = jobs;
    ErrorReport rep;
    if (c.sweep == SweepKind::Interface) {
        rep = sweep_interface(build_coupling(c), c.sweep_values, o);
    } else {
        rep = sweep_epsilon([&c](double eps) { return build_coupling(c, c.L0, eps * c.length()); }, c.sweep_values, o);
    }
    std::size_t ok = 0;
    for (const auto& r : rep.rows) ok += r.ok();
    try {
        apply_bound(rep);
    } catch (const std::invalid_argument& e) {
        log << "bound not calibrated: " << e.what() << "\n";
    }
    write_report_csv(dir / "report.csv", rep, hash);
    const bool iface = c.sweep == SweepKind::Interface;
    detail::write_text(dir / "sweep.plt", hash, iface ? plot_interface_sweep("report.csv") : plot_epsilon_sweep("report.csv"));
    meta["L1"] = c.L1;
    meta["M"] = rep.M ? nlohmann::ordered_json(*rep.M) : nlohmann::ordered_json(nullptr);
    if (iface) {
        const auto th = detect_threshold(rep);
        meta["detected_threshold"] = th ? nlohmann::ordered_json(*th) : nlohmann::ordered_json(nullptr);
    } else if (ok >= 2) {
        std::vector<double> x, y;
        for (const auto& r : rep.rows)
            if (r.ok() && r.rel_h1 > 0) x.push_back(r.sweep_value), y.push_back(r.rel_h1);
        if (x.size() >= 2) meta["loglog_slope"] = loglog_slope(x, y);
    }
    detail::write_meta(dir, meta);
    log << ok << " of " << rep.rows.size() << " sweep rows succeeded\n";
    return ok > 0 ? Ok : NotConverged;
}

/// Built-in verification: discretisation orders and the Schwarz properties on the configured case.
inline int cmd_verify(const RunConfig& c, std::ostream& log) {
    int failed = 0;
    auto report = [&](const std::string& name, int outcome, const std::string& detail) {
        static const char* tag[] = {"PASS", "FAIL", "SKIP"};
        log << "[" << tag[outcome] << "] " << name << ": " << detail << "\n";
        failed += outcome == 1;
    };
    char buf[200];

    const int nz = c.nz();
    if (nz < 4) {
        for (const char* n : {"order 1-D", "order 2-D rectangle", "order 2-D funnel"})
            report(n, 2, "needs at least 4 vertical cells, configuration has " + std::to_string(nz));
    } else {
        const std::pair<const char*, OrderStudy> studies[] = {{"order 1-D", order_study_1d(nz)},
                                                               {"order 2-D rectangle", order_study_rectangle(nz)},
                                                               {"order 2-D funnel", order_study_funnel(nz)}};
        for (const auto& [name, s] : studies) {
            std::snprintf(buf, sizeof buf, "min error ratio per halving %.3f (>= 3.8)", s.min_ratio());
            report(name, s.min_ratio() >= 3.8 ? 0 : 1, buf);
        }
    }

    const CouplingConfig base = build_coupling(c);
    const double lopt = lambda_opt(c.kappa, c.H, c.L0).value;
    auto run = [&](double lambda) -> std::optional<CoupledSolution> {
        CouplingConfig cc = base;
        cc.lambda = lambda;
        try {
            return schwarz_solve(cc);
        } catch (const NonConvergence&) {
            return std::nullopt;
        }
    };

    const auto opt = run(lopt);
    if (!opt) {
        report("two-iteration optimality", 1, "lambda_opt run did not converge");
    } else {
        const double r = second_iteration_ratio(opt->trace);
        std::snprintf(buf, sizeof buf, "iteration-2 / iteration-1 difference %.3e (< 1e-6)", r);
        report("two-iteration optimality", r < 1e-6 ? 0 : 1, buf);
    }

    double worst_constraint = opt ? std::max(check_constraints(*opt).value, check_constraints(*opt).flux) : INFINITY;
    for (double fac : {0.25, 4.0}) {
        const double lam = fac * lopt;
        const auto s = run(lam);
        std::snprintf(buf, sizeof buf, "contraction lambda = %g lambda_opt", fac);
        const std::string name = buf;
        if (!s) {
            report(name, 1, "did not converge");
            worst_constraint = INFINITY;
            continue;
        }
        const double observed = max_alpha_ratio(s->trace, 10 * c.tol);
        const double predicted = contraction_ratio(lam, c.kappa, c.H, c.L0);
        std::snprintf(buf, sizeof buf, "observed %.4f, predicted %.4f (+0.05)", observed, predicted);
        report(name, observed <= predicted + 0.05 ? 0 : 1, buf);
        const auto r = check_constraints(*s);
        worst_constraint = std::max({worst_constraint, r.value, r.flux});
    }
    std::snprintf(buf, sizeof buf, "worst residual %.3e (<= 1e-7)", worst_constraint);
    report("constraint residuals", worst_constraint <= 1e-7 ? 0 : 1, buf);

    return failed ? VerifyFailed : Ok;
}

}  // namespace hetcouple::cli
