// test_macrodyn.cpp — Coarse-grained drift, RK4 conservation, SDE statistics

#include "cgbath/generic.hpp"
#include "cgbath/macrodyn.hpp"
#include "cgbath/model.hpp"
#include "cgbath/ou.hpp"
#include "cgbath/rng.hpp"
#include "cgbath/util.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace cgbath;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

model::SystemSpec confining_spec(double beta = 1.0) {
    auto spec = model::make_running_example(1.0, 0.5, 2.0, beta);
    spec.C_mat << 0.4, 0.2, 0.0;
    return spec;
}

} // namespace

TEST_CASE("drift_det at the hand-computed state") {
    auto spec = model::make_running_example();
    auto derived = model::build_derived(spec);
    auto d = macrodyn::drift_det(spec, derived, vec2(1.0, 0.0), Vec::Zero(3));
    CHECK(d.dz[0] == Catch::Approx(0.0));
    CHECK(d.dz[1] == Catch::Approx(-1.0));
    Vec dw_expect(3);
    dw_expect << -1.0, -0.25, -1.0; // -D (1, .5, 0)
    CHECK((d.dw - dw_expect).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(d.de == Catch::Approx(1.125));
}

TEST_CASE("drift vanishes on the equilibrium family") {
    // n = d = 1 with unit coupling: grad V - C^T C q = 0 for every q
    model::SystemSpec spec;
    spec.n = 1;
    spec.d = 1;
    spec.beta = 1.0;
    model::set_potential(spec, model::PotentialKind::quadratic, 1.0);
    spec.D = Mat::Identity(1, 1);
    spec.C_mat = Mat::Identity(1, 1);
    auto derived = model::build_derived(spec);
    for (double q : {-2.0, 0.3, 1.7}) {
        Vec w(1);
        w << -q; // v = w + C q = 0
        auto d = macrodyn::drift_det(spec, derived, vec2(q, 0.0), w);
        CHECK(d.dz.cwiseAbs().maxCoeff() < 1e-14);
        CHECK(d.dw.cwiseAbs().maxCoeff() < 1e-14);
        CHECK(std::abs(d.de) < 1e-14);
    }
}

TEST_CASE("entropy production rate is nonnegative at random states") {
    auto spec = model::make_running_example();
    auto derived = model::build_derived(spec);
    Rng rng(12);
    for (int i = 0; i < 1000; ++i) {
        auto d = macrodyn::drift_det(spec, derived, rng.normal_vec(2), rng.normal_vec(3));
        CHECK(d.de >= -1e-12);
    }
}

TEST_CASE("RK4: uncoupled oscillator conserves |z|^2 and E_GEN, e is monotone") {
    auto spec = model::make_running_example();
    spec.C_mat = Mat::Zero(3, 1);
    auto derived = model::build_derived(spec);
    macrodyn::MacroState s;
    s.z = vec2(1.0, 0.0);
    s.w = Vec::Unit(3, 0);
    macrodyn::IntegratorConfig cfg;
    cfg.dt = 1e-3;

    const double E0 = macrodyn::energy_gen(spec, s);
    double e_prev = s.e;
    double max_z_drift = 0.0, max_E_drift = 0.0;
    for (int k = 0; k < 10000; ++k) {
        s = macrodyn::step_ode(s, spec, derived, cfg);
        max_z_drift = std::max(max_z_drift, std::abs(s.z.squaredNorm() - 1.0));
        max_E_drift = std::max(max_E_drift, std::abs(macrodyn::energy_gen(spec, s) - E0));
        CHECK(s.e >= e_prev - 1e-12);
        e_prev = s.e;
    }
    CHECK(max_z_drift < 1e-10);
    CHECK(max_E_drift < 1e-8);
}

TEST_CASE("RK4 with coupling: E_GEN conserved, S_GEN nondecreasing") {
    auto spec = model::make_running_example();
    auto derived = model::build_derived(spec);
    macrodyn::MacroState s;
    s.z = vec2(1.0, 0.0);
    s.w = Vec::Unit(3, 0);
    macrodyn::IntegratorConfig cfg;
    cfg.dt = 1e-3;
    auto traj = macrodyn::run_ode(spec, derived, s, cfg, 10.0);
    double max_drift = 0.0;
    for (double E : traj.E_gen) max_drift = std::max(max_drift, std::abs(E - traj.E_gen[0]));
    CHECK(max_drift < 1e-8);
    for (std::size_t k = 1; k < traj.S_gen.size(); ++k) {
        CHECK(traj.S_gen[k] >= traj.S_gen[k - 1] - 1e-12);
    }
}

TEST_CASE("step_sde with zero noise reduces to the deterministic Euler update") {
    auto spec = confining_spec();
    auto derived = model::build_derived(spec);
    derived.Sigma = Mat::Zero(3, 3);
    macrodyn::MacroState s;
    s.z = vec2(0.8, -0.4);
    s.w = Vec::Unit(3, 1);
    macrodyn::IntegratorConfig cfg;
    cfg.dt = 1e-2;
    cfg.scheme = macrodyn::Scheme::euler_maruyama;
    Rng rng(3);
    auto out = macrodyn::step_sde(s, spec, derived, cfg, rng);
    auto d = macrodyn::drift_det(spec, derived, s.z, s.w);
    CHECK((out.z - (s.z + cfg.dt * d.dz)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((out.w - (s.w + cfg.dt * d.dw)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(out.e == Catch::Approx(s.e + cfg.dt * d.de));
}

TEST_CASE("frozen z: the w marginal relaxes to the OU stationary covariance") {
    auto spec = model::make_running_example(1.0, 0.5, 2.0, 1.0);
    spec.C_mat = Mat::Zero(3, 1);
    spec.canonical_poisson = false;
    spec.poisson = [](const Vec&) { return Mat::Zero(2, 2); }; // z frozen
    auto derived = model::build_derived(spec);

    macrodyn::IntegratorConfig cfg;
    cfg.dt = 5e-3;
    cfg.scheme = macrodyn::Scheme::euler_maruyama;
    const int M = 4000;
    const long steps = 400; // T = 2, several bath relaxation times
    Mat acc = Mat::Zero(3, 3);
    for (int i = 0; i < M; ++i) {
        Rng rng = Rng::substream(606, i);
        macrodyn::MacroState s;
        s.z = vec2(0.5, 0.5);
        s.w = rng.normal_vec(3); // wrong-variance start forces actual relaxation
        for (long k = 0; k < steps; ++k) s = macrodyn::step_sde(s, spec, derived, cfg, rng);
        acc += s.w * s.w.transpose() / M;
    }
    const double se = std::sqrt(2.0) / std::sqrt(static_cast<double>(M));
    // allow an O(dt) discretization bias on top of the MC band
    CHECK((acc - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 4.0 * se + 5.0 * cfg.dt);
}

TEST_CASE("semi-implicit w scheme stays stable where explicit EM blows up") {
    auto spec = confining_spec();
    spec.D = model::running_example_D(80.0, 60.0, 2.0); // stiff bath, |D| dt > 2
    auto derived = model::build_derived(spec);
    macrodyn::IntegratorConfig cfg;
    cfg.dt = 4e-2;
    cfg.scheme = macrodyn::Scheme::semi_implicit_w;
    Rng rng(9);
    macrodyn::MacroState s;
    s.z = vec2(1.0, 0.0);
    s.w = Vec::Unit(3, 0);
    for (int k = 0; k < 500; ++k) s = macrodyn::step_sde(s, spec, derived, cfg, rng);
    CHECK(s.w.cwiseAbs().maxCoeff() < 50.0);

    cfg.scheme = macrodyn::Scheme::euler_maruyama;
    Rng rng2(9);
    macrodyn::MacroState s2;
    s2.z = vec2(1.0, 0.0);
    s2.w = Vec::Unit(3, 0);
    for (int k = 0; k < 500 && s2.w.allFinite(); ++k) {
        s2 = macrodyn::step_sde(s2, spec, derived, cfg, rng2);
        if (s2.w.cwiseAbs().maxCoeff() > 1e100) break;
    }
    CHECK(s2.w.cwiseAbs().maxCoeff() > 1e10);
}

TEST_CASE("mean e-increment matches the Ito drift including the trace term") {
    auto spec = confining_spec(2.0);
    auto derived = model::build_derived(spec);
    macrodyn::IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.scheme = macrodyn::Scheme::euler_maruyama;

    macrodyn::MacroState s;
    s.z = vec2(1.0, -0.5);
    s.w = Vec::Unit(3, 0);
    const Vec v = s.w + model::coupling_q(spec, s.z);
    const double drift = v.dot(spec.D * v) - spec.D.trace() / spec.beta;

    RunningStat stat;
    const int M = 200000;
    for (int i = 0; i < M; ++i) {
        Rng rng = Rng::substream(123, i);
        auto out = macrodyn::step_sde(s, spec, derived, cfg, rng);
        stat.push((out.e - s.e) / cfg.dt);
    }
    CHECK(std::abs(stat.mean - drift) < 4.0 * stat.stderror());
}

TEST_CASE("stationary energy flux balances on average") {
    auto spec = confining_spec();
    auto derived = model::build_derived(spec);
    macrodyn::IntegratorConfig cfg;
    cfg.dt = 2e-3;
    cfg.scheme = macrodyn::Scheme::euler_maruyama;
    // nu_beta for C = (0.4, 0.2, 0), quadratic V: z ~ N(0, Gz), w | z ~ N(-Cq, I/beta)
    // with q-variance 1/(1 - |C|^2) from the effective potential
    const double qvar = 1.0 / (1.0 - 0.2);
    const int M = 20000;
    const long steps = 500; // T = 1
    RunningStat de;
    for (int i = 0; i < M; ++i) {
        Rng rng = Rng::substream(31337, i);
        macrodyn::MacroState s;
        s.z = vec2(std::sqrt(qvar) * rng.normal(), rng.normal());
        s.w = -model::coupling_q(spec, s.z) + rng.normal_vec(3);
        for (long k = 0; k < steps; ++k) s = macrodyn::step_sde(s, spec, derived, cfg, rng);
        de.push(s.e);
    }
    CHECK(std::abs(de.mean) < 4.0 * de.stderror() + 10.0 * cfg.dt);
}

TEST_CASE("per-step energy error is bounded by dt times the state increment") {
    auto spec = model::make_running_example();
    auto derived = model::build_derived(spec);
    macrodyn::IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.scheme = macrodyn::Scheme::euler_maruyama;
    Rng rng(777);
    for (int i = 0; i < 1000; ++i) {
        macrodyn::MacroState s;
        s.z = rng.normal_vec(2);
        s.w = rng.normal_vec(3);
        s.e = rng.normal();
        auto out = macrodyn::step_sde(s, spec, derived, cfg, rng);
        const double dE = std::abs(macrodyn::energy_gen(spec, out) -
                                   macrodyn::energy_gen(spec, s));
        const double dstate = (out.z - s.z).norm() + (out.w - s.w).norm() +
                              std::abs(out.e - s.e);
        CHECK(dE <= 50.0 * cfg.dt * dstate);
    }
}

TEST_CASE("pathwise E_GEN error decays at first order in dt") {
    auto spec = model::make_running_example();
    auto derived = model::build_derived(spec);
    const double T = 1.0;
    std::vector<double> dts{4e-3, 2e-3, 1e-3};
    std::vector<double> means;
    for (double dt : dts) {
        macrodyn::IntegratorConfig cfg;
        cfg.dt = dt;
        cfg.scheme = macrodyn::Scheme::euler_maruyama;
        RunningStat stat;
        for (int path = 0; path < 100; ++path) {
            Rng rng = Rng::substream(2718, path);
            macrodyn::MacroState s;
            s.z = vec2(1.0, 0.0);
            s.w = Vec::Unit(3, 0);
            const double E0 = macrodyn::energy_gen(spec, s);
            const long steps = std::lround(T / dt);
            for (long k = 0; k < steps; ++k) s = macrodyn::step_sde(s, spec, derived, cfg, rng);
            stat.push(std::abs(macrodyn::energy_gen(spec, s) - E0));
        }
        means.push_back(stat.mean);
    }
    // least-squares slope in log-log
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        const double x = std::log(dts[i]), y = std::log(means[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = dts.size();
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope >= 0.8);
}

TEST_CASE("assembled GENERIC drift agrees with drift_det") {
    auto spec = model::make_running_example();
    auto g = generic::make_structure(spec);
    Rng rng(44);
    for (int i = 0; i < 200; ++i) {
        const Vec z = rng.normal_vec(2);
        const Vec w = rng.normal_vec(3);
        auto d = macrodyn::drift_det(spec, g.ops, z, w);
        const Vec y = g.pack(z, w, rng.normal());
        const Vec assembled = generic::assemble_drift(g, y, false);
        CHECK((assembled.head(2) - d.dz).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((assembled.segment(2, 3) - d.dw).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(assembled[5] - d.de) < 1e-12);
    }
}
