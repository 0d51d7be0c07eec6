// cgbath_cli.cpp — command-line front end.
//
// Subcommands:
//   simulate micro|macro      trajectory CSV
//   verify compression|ou|structure
//   compare-micro-macro
//   ensemble logz|equivalence|variance|invariance
// Exit codes: 0 pass/success, 1 verification failure, 2 usage or config error.
// Every output file gets a sibling <out>.manifest.json; CSV/JSON payloads are
// deterministic for fixed (config, seed, subcommand).

#include "cgbath/config.hpp"
#include "cgbath/dilation.hpp"
#include "cgbath/ensemble.hpp"
#include "cgbath/generic.hpp"
#include "cgbath/macrodyn.hpp"
#include "cgbath/micro.hpp"
#include "cgbath/model.hpp"
#include "cgbath/ou.hpp"
#include "cgbath/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <string>
#include <vector>

using namespace cgbath;
using nlohmann::json;

namespace {

struct Common {
    std::string config_path;
    std::string out;
    std::uint64_t seed{0};
    int threads{1};
};

config::ParsedConfig resolve_config(const Common& c) {
    if (!c.config_path.empty()) return config::load_config(c.config_path);
    config::ParsedConfig parsed;
    parsed.spec = model::make_running_example();
    parsed.running_example_bath = true;
    parsed.theta1 = 1.0;
    parsed.theta2 = 0.5;
    parsed.varsigma = 2.0;
    return parsed;
}

Vec to_vec(const std::vector<double>& v) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
}

Vec default_z0(const model::SystemSpec& spec) {
    Vec z = Vec::Zero(2 * spec.n);
    z[0] = 1.0;
    return z;
}

int run_simulate_micro(const Common& c, double h, double T, bool thermal,
                       const std::vector<double>& z0v, const std::vector<double>& w0v) {
    auto parsed = resolve_config(c);
    const auto& spec = parsed.spec;
    auto basis = parsed.basis();
    micro::MicroConfig cfg;
    cfg.h = h;
    cfg.T = T;
    cfg.thermal = thermal;
    cfg.seed = c.seed;

    Vec z0 = z0v.empty() ? default_z0(spec) : to_vec(z0v);
    Vec w0 = w0v.empty() ? Vec(Vec::Unit(spec.d, 0)) : to_vec(w0v);
    Rng rng(c.seed);
    auto state = thermal ? micro::init_thermal(spec, basis, z0, w0, cfg, rng)
                         : micro::init_deterministic(spec, basis, z0, w0, cfg);
    auto traj = micro::run(spec, basis, std::move(state), cfg);

    const std::string out = c.out.empty() ? "micro_traj.csv" : c.out;
    report::CsvWriter csv(out);
    std::vector<std::string> cols{"t"};
    for (int i = 0; i < 2 * spec.n; ++i) cols.push_back("z" + std::to_string(i));
    for (int i = 0; i < spec.d; ++i) cols.push_back("w" + std::to_string(i));
    cols.push_back("H_zw");
    csv.header(cols);
    for (std::size_t k = 0; k < traj.t.size(); ++k) {
        std::vector<double> row{traj.t[k]};
        for (int i = 0; i < 2 * spec.n; ++i) row.push_back(traj.z(i, k));
        for (int i = 0; i < spec.d; ++i) row.push_back(traj.w(i, k));
        row.push_back(traj.H_zw[k]);
        csv.row(row);
    }
    report::write_manifest(out, "simulate micro", c.config_path, c.seed, &spec);
    std::cout << "wrote " << out << " (" << traj.t.size() << " records)\n";
    return 0;
}

int run_simulate_macro(const Common& c, const std::string& mode, double dt, double T,
                       const std::vector<double>& z0v, const std::vector<double>& w0v) {
    auto parsed = resolve_config(c);
    const auto& spec = parsed.spec;
    auto derived = model::build_derived(spec);
    macrodyn::MacroState s;
    s.z = z0v.empty() ? default_z0(spec) : to_vec(z0v);
    s.w = w0v.empty() ? Vec(Vec::Unit(spec.d, 0)) : to_vec(w0v);
    macrodyn::IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.seed = c.seed;

    macrodyn::Trajectory traj;
    if (mode == "ode") {
        cfg.scheme = macrodyn::Scheme::rk4;
        traj = macrodyn::run_ode(spec, derived, s, cfg, T);
    } else if (mode == "sde" || mode == "semi-implicit-w") {
        cfg.scheme = mode == "semi-implicit-w" ? macrodyn::Scheme::semi_implicit_w
                                               : macrodyn::Scheme::euler_maruyama;
        Rng rng(c.seed);
        traj = macrodyn::run_sde(spec, derived, s, cfg, T, rng);
    } else {
        std::cerr << "usage error: --mode must be ode, sde, or semi-implicit-w\n";
        return 2;
    }

    const std::string out = c.out.empty() ? "macro_traj.csv" : c.out;
    report::CsvWriter csv(out);
    std::vector<std::string> cols{"t"};
    for (int i = 0; i < 2 * spec.n; ++i) cols.push_back("z" + std::to_string(i));
    for (int i = 0; i < spec.d; ++i) cols.push_back("w" + std::to_string(i));
    cols.insert(cols.end(), {"e", "E_gen", "S_gen"});
    csv.header(cols);
    for (std::size_t k = 0; k < traj.t.size(); ++k) {
        std::vector<double> row{traj.t[k]};
        for (int i = 0; i < 2 * spec.n; ++i) row.push_back(traj.z(i, k));
        for (int i = 0; i < spec.d; ++i) row.push_back(traj.w(i, k));
        row.push_back(traj.e[k]);
        row.push_back(traj.E_gen[k]);
        row.push_back(traj.S_gen[k]);
        csv.row(row);
    }
    report::write_manifest(out, "simulate macro", c.config_path, c.seed, &spec);
    std::cout << "wrote " << out << " (" << traj.t.size() << " records)\n";
    return 0;
}

int run_verify_compression(const Common& c, double t_max, int steps, double tol) {
    auto parsed = resolve_config(c);
    auto basis = parsed.basis();
    if (tol <= 0) {
        tol = basis.mode == dilation::DilationBasis::Mode::running_example ? 1e-10 : 1e-7;
    }
    std::vector<double> ts;
    for (int i = 1; i <= steps; ++i) ts.push_back(t_max * i / steps);
    auto rep = dilation::verify_compression(basis, ts, tol);

    const std::string out = c.out.empty() ? "compression.csv" : c.out;
    report::CsvWriter csv(out);
    csv.header({"t", "error"});
    for (const auto& [t, err] : rep.per_t) csv.row({t, err});
    report::write_manifest(out, "verify compression", c.config_path, c.seed, &parsed.spec);
    std::cout << "compression: max error " << rep.max_error << " (tol " << tol << ") "
              << (rep.pass ? "PASS" : "FAIL") << "\n";
    return rep.pass ? 0 : 1;
}

int run_verify_ou(const Common& c, int paths, double dt, double lag, double se_mult) {
    auto parsed = resolve_config(c);
    const auto& spec = parsed.spec;
    auto derived = model::build_derived(spec);
    if (dt <= 0) dt = lag;
    const int lag_index = static_cast<int>(std::lround(lag / dt));
    auto params = ou::make_params(spec, derived, dt);

    std::vector<ou::OUPath> ensemble_paths(paths);
    parallel_for(static_cast<std::size_t>(paths), c.threads, [&](std::size_t i) {
        ensemble_paths[i] = ou::sample_path(params, lag_index, c.seed, i);
    });
    auto est = ou::estimate_covariance(ensemble_paths, lag_index);
    const Mat analytic = ou::covariance(params, 0.0, lag_index * dt);

    const std::string out = c.out.empty() ? "ou_covariance.csv" : c.out;
    report::CsvWriter csv(out);
    csv.header({"i", "j", "empirical", "analytic", "se"});
    bool pass = true;
    double worst = 0.0;
    for (int i = 0; i < spec.d; ++i) {
        for (int j = 0; j < spec.d; ++j) {
            csv.row({static_cast<double>(i), static_cast<double>(j), est.mean(i, j),
                     analytic(i, j), est.se(i, j)});
            const double dev = std::abs(est.mean(i, j) - analytic(i, j));
            worst = std::max(worst, dev / est.se(i, j));
            pass = pass && dev <= se_mult * est.se(i, j);
        }
    }
    report::write_manifest(out, "verify ou", c.config_path, c.seed, &spec);
    std::cout << "ou covariance: worst deviation " << worst << " se (limit " << se_mult
              << ") " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

int run_verify_structure(const Common& c, int states) {
    auto parsed = resolve_config(c);
    auto g = generic::make_structure(parsed.spec);
    Rng rng(c.seed == 0 ? 1 : c.seed);
    std::vector<Vec> ys;
    ys.reserve(states);
    for (int i = 0; i < states; ++i) ys.push_back(2.0 * rng.normal_vec(g.dim()));
    auto rep = generic::check_structure(g, ys);

    // independent drift assembly must match the integrator's drift
    double drift_err = 0.0;
    for (const Vec& y : ys) {
        const auto d = macrodyn::drift_det(parsed.spec, g.ops, g.z_of(y), g.w_of(y));
        Vec expect(g.dim());
        expect << d.dz, d.dw, d.de;
        drift_err = std::max(drift_err,
                             (generic::assemble_drift(g, y) - expect).cwiseAbs().maxCoeff());
    }
    rep.rows.push_back({"drift_match", drift_err, 1e-12, drift_err <= 1e-12});

    json j;
    j["states"] = states;
    j["checks"] = json::array();
    for (const auto& row : rep.rows) {
        j["checks"].push_back({{"name", row.name},
                               {"max_error", report::round12(row.max_error)},
                               {"tol", row.tol},
                               {"pass", row.pass}});
        std::cout << row.name << ": max error " << row.max_error << " (tol " << row.tol
                  << ") " << (row.pass ? "PASS" : "FAIL") << "\n";
    }
    j["all_pass"] = rep.all_pass();
    const std::string out = c.out.empty() ? "structure_report.json" : c.out;
    std::ofstream(out) << j.dump(2) << "\n";
    report::write_manifest(out, "verify structure", c.config_path, c.seed, &parsed.spec);
    return rep.all_pass() ? 0 : 1;
}

int run_compare(const Common& c, double h, double T, double tol,
                const std::vector<double>& z0v, const std::vector<double>& w0v) {
    auto parsed = resolve_config(c);
    const auto& spec = parsed.spec;
    auto derived = model::build_derived(spec);
    auto basis = parsed.basis();

    micro::MicroConfig cfg;
    cfg.h = h;
    cfg.T = T;
    Vec z0 = z0v.empty() ? default_z0(spec) : to_vec(z0v);
    Vec w0 = w0v.empty() ? Vec(Vec::Unit(spec.d, 0)) : to_vec(w0v);
    auto state = micro::init_deterministic(spec, basis, z0, w0, cfg);
    auto fine = micro::run(spec, basis, std::move(state), cfg);

    macrodyn::MacroState m0;
    m0.z = z0;
    m0.w = w0;
    macrodyn::IntegratorConfig mcfg;
    mcfg.dt = h;
    auto coarse = macrodyn::run_ode(spec, derived, m0, mcfg, T);

    const std::string out = c.out.empty() ? "micro_macro_dev.csv" : c.out;
    report::CsvWriter csv(out);
    csv.header({"t", "deviation"});
    double max_dev = 0.0;
    for (std::size_t k = 0; k < fine.t.size(); ++k) {
        const double dev = std::max((fine.z.col(k) - coarse.z.col(k)).cwiseAbs().maxCoeff(),
                                    (fine.w.col(k) - coarse.w.col(k)).cwiseAbs().maxCoeff());
        csv.row({fine.t[k], dev});
        max_dev = std::max(max_dev, dev);
    }
    report::write_manifest(out, "compare-micro-macro", c.config_path, c.seed, &spec);
    std::cout << "max_dev=" << report::csv_double(max_dev) << "\n";
    return max_dev <= tol ? 0 : 1;
}

int run_ensemble_logz(const Common& c, double n, double beta, double e, double tol) {
    const double logz = ensemble::microcanonical_logZ(n, beta, e);
    const double gap = ensemble::normalized_gap(n, beta, e);
    const double limit = -(2.0 * beta * e + beta * beta * e * e);
    json j;
    j["n"] = n;
    j["beta"] = beta;
    j["e"] = e;
    j["logZ"] = report::round12(logz);
    j["C"] = report::round12(ensemble::microcanonical_C(n, beta));
    j["gap"] = report::round12(gap);
    j["n_gap"] = report::round12(n * gap);
    j["n_gap_limit"] = report::round12(limit);
    const bool pass = std::abs(gap) <= tol;
    j["pass"] = pass;
    const std::string out = c.out.empty() ? "logz_report.json" : c.out;
    std::ofstream(out) << j.dump(2) << "\n";
    report::write_manifest(out, "ensemble logz", c.config_path, c.seed, nullptr);
    std::cout << "logZ gap " << gap << " (tol " << tol << ") " << (pass ? "PASS" : "FAIL")
              << "\n";
    return pass ? 0 : 1;
}

int run_ensemble_equivalence(const Common& c, int n, int k, int count, double R) {
    auto st = ensemble::sphere_sample(n, R, count, k, c.seed, c.threads);
    bool pass = true;
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
            pass = pass && std::abs(st.cov(a, b) - (a == b ? R : 0.0)) <= 0.02;
        }
        pass = pass && std::abs(st.excess_kurtosis[a]) <= 0.1;
    }
    json j;
    j["n"] = n;
    j["k"] = k;
    j["count"] = count;
    j["R"] = R;
    j["mean"] = json::array();
    j["mean_se"] = json::array();
    j["excess_kurtosis"] = json::array();
    j["excess_kurtosis_se"] = json::array();
    j["cov"] = json::array();
    j["cov_se"] = json::array();
    for (int a = 0; a < k; ++a) {
        j["mean"].push_back(report::round12(st.mean[a]));
        j["mean_se"].push_back(report::round12(st.mean_se[a]));
        j["excess_kurtosis"].push_back(report::round12(st.excess_kurtosis[a]));
        j["excess_kurtosis_se"].push_back(report::round12(st.kurt_se[a]));
        for (int b = 0; b < k; ++b) {
            j["cov"].push_back(report::round12(st.cov(a, b)));
            j["cov_se"].push_back(report::round12(st.cov_se(a, b)));
        }
    }
    j["pass"] = pass;
    const std::string out = c.out.empty() ? "equivalence_report.json" : c.out;
    std::ofstream(out) << j.dump(2) << "\n";
    report::write_manifest(out, "ensemble equivalence", c.config_path, c.seed, nullptr);
    std::cout << "equivalence-of-ensembles " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

int run_ensemble_variance(const Common& c, const std::vector<int>& ns, double R, int count) {
    auto rep = ensemble::variance_bound_check(ns, R, count, c.seed);
    json j;
    j["rows"] = json::array();
    for (const auto& row : rep.rows) {
        j["rows"].push_back({{"n", row.n},
                             {"estimate", report::round12(row.estimate)},
                             {"se", report::round12(row.se)},
                             {"bound", report::round12(row.bound)},
                             {"pass", row.pass}});
        std::cout << "n=" << row.n << " estimate " << row.estimate << " bound " << row.bound
                  << " " << (row.pass ? "PASS" : "FAIL") << "\n";
    }
    j["pass"] = rep.all_pass();
    const std::string out = c.out.empty() ? "variance_report.json" : c.out;
    std::ofstream(out) << j.dump(2) << "\n";
    report::write_manifest(out, "ensemble variance", c.config_path, c.seed, nullptr);
    return rep.all_pass() ? 0 : 1;
}

int run_ensemble_invariance(const Common& c, double T, double dt, int count) {
    auto parsed = resolve_config(c);
    auto derived = model::build_derived(parsed.spec);
    if (!derived.coupling_confining) {
        std::cerr << "warning: I - C^T C is not positive definite; mu_beta_Z may be "
                     "non-integrable for a quadratic potential\n";
    }
    auto rep = ensemble::invariance_test(parsed.spec, derived, T, dt, count,
                                         c.seed == 0 ? 1 : c.seed, c.threads);
    json j;
    j["T"] = T;
    j["dt"] = dt;
    j["count"] = count;
    j["rows"] = json::array();
    int failed = 0;
    for (const auto& row : rep.rows) {
        j["rows"].push_back({{"name", row.name},
                             {"t0", report::round12(row.moment_t0)},
                             {"T", report::round12(row.moment_T)},
                             {"se", report::round12(row.se)},
                             {"allowance", report::round12(row.allowance)},
                             {"pass", row.pass}});
        if (!row.pass) ++failed;
    }
    j["pass"] = rep.all_pass();
    const std::string out = c.out.empty() ? "invariance_report.json" : c.out;
    std::ofstream(out) << j.dump(2) << "\n";
    report::write_manifest(out, "ensemble invariance", c.config_path, c.seed, &parsed.spec);
    std::cout << "invariance: " << (rep.rows.size() - failed) << "/" << rep.rows.size()
              << " moments stable " << (rep.all_pass() ? "PASS" : "FAIL") << "\n";
    return rep.all_pass() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cgbath: heat-bath coarse-graining simulator and verification suite"};
    app.require_subcommand(1);

    Common c;
    app.add_option("--config", c.config_path,
                   "system config file (default: built-in running example)");
    app.add_option("--seed", c.seed, "master RNG seed");
    app.add_option("--out", c.out, "output file path");
    app.add_option("--threads", c.threads, "worker thread cap for ensembles");

    auto* sim = app.add_subcommand("simulate", "integrate a trajectory");
    sim->fallthrough();
    sim->require_subcommand(1);
    double h = 1e-3, T = 10.0, dt = 1e-3;
    bool thermal = false;
    std::vector<double> z0v, w0v;
    std::string mode = "ode";
    auto* sim_micro = sim->add_subcommand("micro", "grid transport simulation");
    sim_micro->fallthrough();
    sim_micro->set_help_flag("--help", "print help"); // frees -h for the spacing flag
    sim_micro->add_option("--h", h, "grid spacing (= time step)");
    sim_micro->add_option("--T", T, "horizon");
    sim_micro->add_flag("--thermal", thermal, "random bath data at temperature 1/beta");
    sim_micro->add_option("--z0", z0v, "initial z");
    sim_micro->add_option("--w0", w0v, "initial w");
    auto* sim_macro = sim->add_subcommand("macro", "coarse-grained (z,w,e) dynamics");
    sim_macro->fallthrough();
    sim_macro->add_option("--mode", mode, "ode | sde | semi-implicit-w");
    sim_macro->add_option("--dt", dt, "time step");
    sim_macro->add_option("--T", T, "horizon");
    sim_macro->add_option("--z0", z0v, "initial z");
    sim_macro->add_option("--w0", w0v, "initial w");

    auto* ver = app.add_subcommand("verify", "structural verification reports");
    ver->fallthrough();
    ver->require_subcommand(1);
    double tol = -1.0, t_max = 5.0, lag = 0.7, se_mult = 4.0, vdt = -1.0;
    int steps = 50, paths = 20000, states = 1000;
    auto* ver_comp = ver->add_subcommand("compression", "Gram vs matrix exponential");
    ver_comp->fallthrough();
    ver_comp->add_option("--tmax", t_max, "largest shift");
    ver_comp->add_option("--steps", steps, "number of shifts");
    ver_comp->add_option("--tol", tol, "pass tolerance");
    auto* ver_ou = ver->add_subcommand("ou", "empirical vs analytic lag covariance");
    ver_ou->fallthrough();
    ver_ou->add_option("--paths", paths, "ensemble size");
    ver_ou->add_option("--dt", vdt, "step (default: the lag)");
    ver_ou->add_option("--lag", lag, "covariance lag");
    ver_ou->add_option("--se-mult", se_mult, "allowed standard-error multiple");
    auto* ver_struct = ver->add_subcommand("structure", "GENERIC axiom suite");
    ver_struct->fallthrough();
    ver_struct->add_option("--states", states, "number of random states");

    auto* cmp = app.add_subcommand("compare-micro-macro", "exact-reduction deviation");
    cmp->fallthrough();
    cmp->set_help_flag("--help", "print help");
    double ch = 1e-3, cT = 10.0, ctol = 5e-3;
    cmp->add_option("--h", ch, "micro grid spacing");
    cmp->add_option("--T", cT, "horizon");
    cmp->add_option("--tol", ctol, "pass tolerance on the max deviation");
    cmp->add_option("--z0", z0v, "initial z");
    cmp->add_option("--w0", w0v, "initial w");

    auto* ens = app.add_subcommand("ensemble", "measure-level checks");
    ens->fallthrough();
    ens->require_subcommand(1);
    double en = 1e6, ebeta = 1.0, ee = 0.7, eR = 1.0, etol = 1e-5, eT = 5.0, edt = 1e-3;
    int ek = 3, ecount = 50000, icount = 10000, eqn = 2000;
    std::vector<int> ens_ns{10, 100, 1000};
    auto* ens_logz = ens->add_subcommand("logz", "microcanonical asymptotics");
    ens_logz->fallthrough();
    ens_logz->add_option("--n", en, "bath dimension");
    ens_logz->add_option("--beta", ebeta, "inverse temperature");
    ens_logz->add_option("--e", ee, "energy offset");
    ens_logz->add_option("--tol", etol, "gap tolerance");
    auto* ens_eq = ens->add_subcommand("equivalence", "sphere marginal vs Gaussian");
    ens_eq->fallthrough();
    ens_eq->add_option("--n", eqn, "sphere dimension");
    ens_eq->add_option("--k", ek, "marginal dimension");
    ens_eq->add_option("--count", ecount, "samples");
    ens_eq->add_option("--R", eR, "per-coordinate second moment");
    auto* ens_var = ens->add_subcommand("variance", "trace-class variance bound");
    ens_var->fallthrough();
    ens_var->add_option("--ns", ens_ns, "sphere dimensions");
    ens_var->add_option("--R", eR, "radius parameter");
    ens_var->add_option("--count", ecount, "samples per n");
    auto* ens_inv = ens->add_subcommand("invariance", "nu_beta under the macro SDE");
    ens_inv->fallthrough();
    ens_inv->add_option("--T", eT, "horizon");
    ens_inv->add_option("--dt", edt, "time step");
    ens_inv->add_option("--count", icount, "sample count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim_micro->parsed()) return run_simulate_micro(c, h, T, thermal, z0v, w0v);
        if (sim_macro->parsed()) return run_simulate_macro(c, mode, dt, T, z0v, w0v);
        if (ver_comp->parsed()) return run_verify_compression(c, t_max, steps, tol);
        if (ver_ou->parsed()) return run_verify_ou(c, paths, vdt, lag, se_mult);
        if (ver_struct->parsed()) return run_verify_structure(c, states);
        if (cmp->parsed()) return run_compare(c, ch, cT, ctol, z0v, w0v);
        if (ens_logz->parsed()) return run_ensemble_logz(c, en, ebeta, ee, etol);
        if (ens_eq->parsed()) return run_ensemble_equivalence(c, eqn, ek, ecount, eR);
        if (ens_var->parsed()) return run_ensemble_variance(c, ens_ns, eR, ecount);
        if (ens_inv->parsed()) return run_ensemble_invariance(c, eT, edt, icount);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
