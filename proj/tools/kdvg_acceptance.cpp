#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "kdvg/kdvg.hpp"

using namespace kdvg;
using std::numbers::pi;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char b[512];
    std::snprintf(b, sizeof b, f, args...);
    return b;
}

/// State shared between criteria: the default soliton run and the
/// almost-conservation constants measured on the data family.
struct Shared {
    Trajectory soliton;
    double soliton_seconds = 0.0;
    double c_acl = 0.0;
};

double soliton_error(const SpectralField& u, double t, double x0) {
    return l2_norm(u - soliton_field(u.grid(), 1.0, x0 + t));
}

Outcome l2_conservation(Shared& sh) {
    const auto start = std::chrono::steady_clock::now();
    GridSpec g(1024, 40.0);
    SolverConfig cfg;
    cfg.record_every = 1000;
    sh.soliton = evolve(soliton_field(g, 1.0, -5.0), 10.0, cfg);
    sh.soliton_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double m0 = sh.soliton.diagnostics.front().momentum;
    double drift = 0.0;
    for (const auto& d : sh.soliton.diagnostics) drift = std::max(drift, std::abs(d.momentum - m0) / m0);
    return {drift < 1e-8 && sh.soliton_seconds < 60.0,
            fmt("momentum drift %.3e (< 1e-8), run %.1f s (< 60 s)", drift, sh.soliton_seconds)};
}

Outcome radius_constancy(Shared& sh) {
    double worst = 0.0;
    for (const auto& s : sh.soliton.snapshots) worst = std::max(worst, std::abs(estimate_radius(s).sigma_hat - pi) / pi);
    return {worst <= 0.05, fmt("max |sigma_hat - pi|/pi %.4f over %zu records (<= 0.05)", worst, sh.soliton.size())};
}

Outcome free_flow_invariance(Shared&) {
    GridSpec g(512, 40.0);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto f = random_band_limited(g, 120, seed);
        const double ref = gevrey_norm(f, {0.3, 1.0});
        for (double t : {0.1, 1.0, 10.0, 100.0, 1000.0}) {
            worst = std::max(worst, std::abs(gevrey_norm(airy_propagate(f, t), {0.3, 1.0}) - ref) / ref);
        }
    }
    return {worst < 1e-12, fmt("max relative change %.3e over 100 fields x 5 times (< 1e-12)", worst)};
}

Outcome almost_conservation(Shared& sh) {
    GridSpec g(1024, 40.0);
    std::string detail;
    bool ok = true;
    const auto sol = acl_sweep(soliton_field(g, 1.0, -5.0));
    double growth = 0.0, sol_mismatch = 0.0;
    for (const auto& r : sol.reports) {
        growth = std::max(growth, r.error_measured / r.rhs_base);
        sol_mismatch = std::max(sol_mismatch, r.identity_mismatch());
    }
    ok = growth < 1e-10 && sol_mismatch < 0.05;
    detail += fmt("soliton growth %.1e (< 1e-10) identity %.3f (< 0.05)", growth, sol_mismatch);
    for (std::uint64_t seed : {1, 2}) {
        const auto sw = acl_sweep(orient_for_growth(sech_bumps_field(g, random_sech_bumps(seed)), 0.4));
        double mismatch = 0.0;
        for (const auto& r : sw.reports) mismatch = std::max(mismatch, r.identity_mismatch());
        ok = ok && sw.fitted_exponent >= 0.70 && mismatch < 0.05;
        sh.c_acl = std::max(sh.c_acl, sw.fitted_constant);
        detail += fmt("; seed %d exponent %.3f (>= 0.70) identity %.3f (< 0.05)", static_cast<int>(seed),
                      sw.fitted_exponent, mismatch);
    }
    detail += fmt("; C_acl %.4g", sh.c_acl);
    return {ok, detail};
}

Outcome sigma_zero_recovery(Shared&) {
    GridSpec g(512, 40.0);
    const auto f = sech_bumps_field(g, random_sech_bumps(2));
    SolverConfig cfg;
    cfg.dt = 1e-4;
    cfg.record_every = 10;
    const auto tr = evolve(f, 0.01, cfg);
    const double r = error_R(tr, 0.0).r;
    double c = 0.0;
    for (const auto& v : commutator_term(f, 0.0).coeffs()) c = std::max(c, std::abs(v));
    return {r < 1e-10 && c < 1e-13, fmt("error_R(0) %.3e (< 1e-10), max |commutator(0)| %.3e (< 1e-13)", r, c)};
}

Outcome scheduler_power_law(Shared&) {
    const ScheduleParams p{1.0, 2.0, 0.01, 1.0, 0.0};
    std::vector<std::pair<double, double>> pts;
    double cond = 0.0;
    for (double T : {10.0, 100.0, 1e3, 1e4}) {
        const double s = sigma_for_horizon(p, T);
        pts.emplace_back(T, s);
        cond = std::max(cond, std::abs(sigma_condition(p, T, s) - 1.0));
    }
    const double slope = fit_power_law(pts).exponent;
    const double err = std::abs(slope + 4.0 / 3.0);
    return {err < 1e-12 && cond < 1e-12, fmt("slope error %.2e, condition error %.2e (both < 1e-12)", err, cond)};
}

Outcome lower_bound_contract(Shared& sh) {
    if (!(sh.c_acl > 0.0)) return {false, "no almost-conservation constant measured"};
    std::size_t violations = 0, rows = 0;
    double margin = INFINITY;
    auto tally = [&](const std::vector<ScheduleRow>& rs) {
        for (const auto& r : rs) {
            ++rows;
            if (r.sigma_hat < r.sigma_certified) ++violations;
            margin = std::min(margin, r.sigma_hat - r.sigma_certified);
        }
    };
    const auto& sol = sh.soliton;
    tally(empirical_schedule(sol, make_schedule_params(sol.snapshots.front(), 1.0, 0.01, sh.c_acl)));
    GridSpec big(16384, 1600.0);
    const auto f = perturbed_soliton_field(big, 1.0, 0.0);
    SolverConfig cfg;
    cfg.dt = 5e-3;
    cfg.record_every = 50;
    tally(empirical_schedule(f, make_schedule_params(f, 1.0, 0.01, sh.c_acl), 10.0, cfg));
    return {violations == 0, fmt("%zu violations over %zu records, min margin %.3f", violations, rows, margin)};
}

Outcome dyadic_machinery(Shared&) {
    GridSpec g(4096, 40.0);
    double pu = 0.0;
    for (std::size_t j = 0; j < g.num_points(); ++j) {
        const double xi = g.xi(j);
        if (xi == 0.0 || std::abs(xi) > 512.0) continue;
        double sum = 0.0;
        for (int e = 0; e <= 10; ++e) sum += bump(DyadicIndex::from_exponent(e), xi);
        pu = std::max(pu, std::abs(sum - 1.0));
    }
    GridSpec h(512, 10.0);
    double rec = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto f = random_band_limited(h, 255, seed);
        SpectralField sum(h);
        for (const auto& [n, b] : littlewood_paley(f)) sum = sum + b;
        rec = std::max(rec, l2_norm(sum - f) / l2_norm(f));
    }
    GridSpec s(1024, 8.0 * pi);
    const auto u = project_PN(random_band_limited(s, 400, 1), DyadicIndex::from_value(2));
    const auto v = project_PN(random_band_limited(s, 400, 2), DyadicIndex::from_value(2));
    const double leak = l2_norm(project_PN(dealiased_product(u, v), DyadicIndex::from_value(32))) / (l2_norm(u) * l2_norm(v));
    return {pu < 1e-14 && rec < 1e-12 && leak < 1e-10,
            fmt("partition %.2e (< 1e-14), reconstruction %.2e (< 1e-12), support leakage %.2e (< 1e-10)", pu, rec,
                leak)};
}

Outcome bilinear_exponents(Shared&) {
    const std::vector<double> ns{8, 16, 32, 64};
    const auto c = ratio_sweep(regime_c_triples(ns), ns, 32, 1);
    std::vector<std::array<double, 3>> diag;
    for (double n : ns) diag.push_back({n, n, n});
    const auto r2 = lemma34_sweep(diag, ns, 32, 1);
    const bool ok = std::abs(c.fitted_exponent + 1.0) <= 0.2 && std::abs(r2.fitted_exponent + 0.75) <= 0.2;
    return {ok, fmt("regime c exponent %.3f (-1 +- 0.2), equal-frequency exponent %.3f (-0.75 +- 0.2)",
                    c.fitted_exponent, r2.fitted_exponent)};
}

Outcome self_convergence(Shared& sh) {
    GridSpec g(1024, 40.0);
    const auto f = soliton_field(g, 1.0, -5.0);
    std::vector<double> errs;
    std::string detail = "errors";
    for (double dt : {0.02, 0.01, 0.005, 0.0025}) {
        SolverConfig cfg;
        cfg.dt = dt;
        cfg.record_every = 1000000;
        cfg.check_boundary = false;
        errs.push_back(soliton_error(evolve(f, 2.0, cfg).snapshots.back(), 2.0, -5.0));
        detail += fmt(" %.2e", errs.back());
    }
    // Halving ratios count while the finer error is above roundoff.
    bool ok = true;
    for (std::size_t i = 1; i < errs.size(); ++i) {
        if (errs[i] < 1e-11) break;
        const double order = std::log2(errs[i - 1] / errs[i]);
        detail += fmt("; order %.2f", order);
        ok = ok && order >= 3.5;
    }
    const double exact = soliton_error(sh.soliton.snapshots.back(), sh.soliton.times.back(), -5.0);
    detail += fmt("; default-settings error at T=10 %.2e (< 1e-6)", exact);
    return {ok && exact < 1e-6, detail};
}

}  // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IONBF, 0);
    struct Criterion {
        int id;
        const char* name;
        double budget_seconds;
        std::function<Outcome(Shared&)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "L2 conservation", 60.0, l2_conservation},
        {2, "soliton radius constancy", 60.0, radius_constancy},
        {3, "free-flow Gevrey invariance", 5.0, free_flow_invariance},
        {4, "almost-conservation scaling", 600.0, almost_conservation},
        {5, "sigma -> 0 recovery", 60.0, sigma_zero_recovery},
        {6, "scheduler power law", 1.0, scheduler_power_law},
        {7, "lower-bound contract", 1800.0, lower_bound_contract},
        {8, "dyadic machinery", 10.0, dyadic_machinery},
        {9, "bilinear exponents", 900.0, bilinear_exponents},
        {10, "solver self-convergence", 600.0, self_convergence},
    };
    Shared sh;
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run(sh);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_seconds;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::printf("criterion %2d %s %s: %s [%.1f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                    in_time ? "" : fmt(", over the %.0f s budget", c.budget_seconds).c_str());
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
