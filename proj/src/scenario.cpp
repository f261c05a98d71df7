#include "warpspec/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace warpspec {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

double parse_radius(const json& j, const char* what) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return kInf;
        fail(Errc::parse_error, std::string(what) + ": only the token \"inf\" is accepted");
    }
    if (!j.is_number()) fail(Errc::parse_error, std::string(what) + ": expected number or \"inf\"");
    return j.get<double>();
}

json radius_to_json(double r) {
    if (std::isfinite(r)) return r;
    return "inf";
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

}  // namespace

Scenario scenario_from_json(const json& j) {
    Scenario s;
    try {
        if (!j.contains("profile")) fail(Errc::parse_error, "scenario: missing \"profile\"");
        const json& jp = j.at("profile");
        std::string kind = jp.at("kind").get<std::string>();
        const json params = jp.value("params", json::object());
        if (kind == "closed_form_G") {
            s.profile.kind = ProfileKind::closed_form_G;
            std::string family = jp.value("family", "constant");
            if (family == "constant") {
                s.profile.g_family = GFamily::constant;
                s.profile.g_constant = params.value("value", 0.0);
            } else if (family == "polynomial") {
                s.profile.g_family = GFamily::polynomial;
                s.profile.g_coeffs = params.at("coeffs").get<std::vector<double>>();
            } else {
                fail(Errc::parse_error, "profile: unknown closed_form_G family " + family);
            }
        } else if (kind == "closed_form_sigma") {
            s.profile.kind = ProfileKind::closed_form_sigma;
            std::string family = jp.value("family", "euclidean");
            if (family == "euclidean") {
                s.profile.sigma_family = SigmaFamily::euclidean;
            } else if (family == "hyperbolic") {
                s.profile.sigma_family = SigmaFamily::hyperbolic;
                s.profile.k = params.at("k").get<double>();
            } else if (family == "poly_exp") {
                s.profile.sigma_family = SigmaFamily::poly_exp;
                s.profile.p_coeffs = params.at("poly_coeffs").get<std::vector<double>>();
                s.profile.q_coeffs = params.at("exp_coeffs").get<std::vector<double>>();
            } else {
                fail(Errc::parse_error, "profile: unknown closed_form_sigma family " + family);
            }
        } else if (kind == "tabulated_G") {
            s.profile.kind = ProfileKind::tabulated_G;
            s.profile.knots = params.at("t").get<std::vector<double>>();
            s.profile.values = params.at("values").get<std::vector<double>>();
            s.profile.interp_order = params.value("interp_order", 3);
            s.profile.extrapolate = params.value("extrapolate", false);
            if (params.contains("tail_majorant")) {
                const json& tm = params.at("tail_majorant");
                std::string tk = tm.value("kind", "zero");
                if (tk == "zero") {
                    s.profile.tail.kind = TailMajorant::Kind::zero;
                } else if (tk == "power") {
                    s.profile.tail.kind = TailMajorant::Kind::power;
                    s.profile.tail.coeff = tm.at("C").get<double>();
                    s.profile.tail.exponent = tm.at("p").get<double>();
                    s.profile.tail.shift = tm.value("shift", 0.0);
                } else {
                    fail(Errc::parse_error, "tail_majorant: unknown kind " + tk);
                }
            }
        } else {
            fail(Errc::parse_error, "profile: unknown kind " + kind);
        }

        s.profile.m = j.value("m", 2);
        s.profile.l = j.value("l", 0);
        if (j.contains("r_phi")) s.profile.r_phi = parse_radius(j.at("r_phi"), "r_phi");
        if (j.contains("H")) {
            const json& jh = j.at("H");
            if (jh.is_number()) {
                s.profile.h_constant = true;
                s.profile.h0 = jh.get<double>();
            } else {
                s.profile.h_constant = false;
                s.profile.h_r = jh.at("r").get<std::vector<double>>();
                s.profile.h_vals = jh.at("values").get<std::vector<double>>();
            }
        }

        if (j.contains("analysis")) {
            const json& ja = j.at("analysis");
            s.analysis.r_cap = ja.value("r_cap", s.analysis.r_cap);
            s.analysis.tol = ja.value("tol", s.analysis.tol);
            s.analysis.grid_points = ja.value("grid_points", s.analysis.grid_points);
            s.analysis.classify_tol = ja.value("classify_tol", s.analysis.classify_tol);
        }
        if (j.contains("mc")) {
            const json& jm = j.at("mc");
            s.mc.n_paths = jm.value("n_paths", s.mc.n_paths);
            s.mc.dt = jm.value("dt", s.mc.dt);
            s.mc.seed = jm.value("seed", s.mc.seed);
            s.mc.rho0 = jm.value("rho0", s.mc.rho0);
            if (jm.contains("R_list")) s.mc.R_list = jm.at("R_list").get<std::vector<double>>();
            s.mc.t_cap = jm.value("t_cap", s.mc.t_cap);
            s.mc.t_cap_factor = jm.value("t_cap_factor", s.mc.t_cap_factor);
            s.mc.antithetic = jm.value("antithetic", s.mc.antithetic);
        }
        if (j.contains("output")) {
            const json& jo = j.at("output");
            s.output.format = jo.value("format", s.output.format);
            s.output.dump_tables = jo.value("dump_tables", s.output.dump_tables);
        }
        if (j.contains("assumptions")) {
            const json& js = j.at("assumptions");
            s.assumptions.proper = js.value("proper", false);
            s.assumptions.minimal = js.value("minimal", false);
            s.assumptions.stochastically_complete_M = js.value("stochastically_complete_M", false);
        }
    } catch (const json::exception& e) {
        fail(Errc::parse_error, std::string("scenario: ") + e.what());
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::parse_error, "cannot open scenario file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(Errc::parse_error, std::string("scenario JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

ordered_json scenario_to_json(const Scenario& s) {
    ordered_json jp;
    switch (s.profile.kind) {
        case ProfileKind::closed_form_G: {
            jp["kind"] = "closed_form_G";
            if (s.profile.g_family == GFamily::constant) {
                jp["family"] = "constant";
                jp["params"] = {{"value", s.profile.g_constant}};
            } else {
                jp["family"] = "polynomial";
                jp["params"] = {{"coeffs", s.profile.g_coeffs}};
            }
            break;
        }
        case ProfileKind::closed_form_sigma: {
            jp["kind"] = "closed_form_sigma";
            if (s.profile.sigma_family == SigmaFamily::euclidean) {
                jp["family"] = "euclidean";
                jp["params"] = ordered_json::object();
            } else if (s.profile.sigma_family == SigmaFamily::hyperbolic) {
                jp["family"] = "hyperbolic";
                jp["params"] = {{"k", s.profile.k}};
            } else {
                jp["family"] = "poly_exp";
                jp["params"] = {{"poly_coeffs", s.profile.p_coeffs},
                                {"exp_coeffs", s.profile.q_coeffs}};
            }
            break;
        }
        case ProfileKind::tabulated_G: {
            jp["kind"] = "tabulated_G";
            ordered_json params;
            params["t"] = s.profile.knots;
            params["values"] = s.profile.values;
            params["interp_order"] = s.profile.interp_order;
            params["extrapolate"] = s.profile.extrapolate;
            if (s.profile.tail.kind == TailMajorant::Kind::power)
                params["tail_majorant"] = {{"kind", "power"},
                                           {"C", s.profile.tail.coeff},
                                           {"p", s.profile.tail.exponent},
                                           {"shift", s.profile.tail.shift}};
            else
                params["tail_majorant"] = {{"kind", "zero"}};
            jp["params"] = std::move(params);
            break;
        }
    }

    ordered_json j;
    j["profile"] = std::move(jp);
    j["m"] = s.profile.m;
    j["l"] = s.profile.l;
    j["r_phi"] = radius_to_json(s.profile.r_phi);
    if (s.profile.h_constant)
        j["H"] = s.profile.h0;
    else
        j["H"] = {{"r", s.profile.h_r}, {"values", s.profile.h_vals}};
    j["analysis"] = {{"r_cap", s.analysis.r_cap},
                     {"tol", s.analysis.tol},
                     {"grid_points", s.analysis.grid_points},
                     {"classify_tol", s.analysis.classify_tol}};
    j["mc"] = {{"n_paths", s.mc.n_paths},   {"dt", s.mc.dt},
               {"seed", s.mc.seed},         {"rho0", s.mc.rho0},
               {"R_list", s.mc.R_list},     {"t_cap", s.mc.t_cap},
               {"t_cap_factor", s.mc.t_cap_factor}, {"antithetic", s.mc.antithetic}};
    j["output"] = {{"format", s.output.format}, {"dump_tables", s.output.dump_tables}};
    j["assumptions"] = {{"proper", s.assumptions.proper},
                        {"minimal", s.assumptions.minimal},
                        {"stochastically_complete_M", s.assumptions.stochastically_complete_M}};
    return j;
}

Pipeline run_analysis(const Scenario& s, Exec exec) {
    Pipeline pl;
    pl.profile = std::make_shared<const ProfileSpec>(make_profile(s.profile));
    int d = product_reduce(*pl.profile);

    double r_work = std::isfinite(pl.profile->r_phi()) ? pl.profile->r_phi() : s.analysis.r_cap;
    if (pl.profile->kind() == ProfileKind::tabulated_G)
        r_work = std::min(r_work, pl.profile->table_r_max());

    auto w = std::make_shared<const WarpingFunction>(
        solve_sigma(pl.profile, r_work, s.analysis.tol));
    if (w->truncated_at() && *w->truncated_at() <= r_work)
        r_work = 0.995 * *w->truncated_at();  // sigma vanished; everything lives left of r*
    pl.warping = w;

    pl.table = std::make_shared<const RatioTable>(
        build_ratio_table(w, d, r_work, s.analysis.tol, exec, s.analysis.grid_points));
    pl.report = assemble_report(*pl.profile, *pl.table, s.assumptions, s.analysis.classify_tol);
    return pl;
}

namespace {

ordered_json opt_num(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

ordered_json finite_or_token(double v, const char* token) {
    if (std::isfinite(v)) return v;
    return token;
}

}  // namespace

ordered_json report_to_json(const Scenario& s, const Pipeline& p) {
    const EstimateReport& r = p.report;
    ordered_json j;
    j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    j["scenario"] = scenario_to_json(s);

    ordered_json rep;
    rep["m"] = r.m;
    rep["l"] = r.l;
    rep["effective_dim"] = r.effective_dim;
    rep["r_phi"] = radius_to_json(r.r_phi);
    rep["r_work"] = r.r_work;

    const WarpingFunction& w = *p.warping;
    rep["warping"] = {{"r_max", w.r_max()},
                      {"tol", w.tol()},
                      {"series_t0", w.series().t0},
                      {"closed_form", w.closed_form()},
                      {"max_defect", w.max_defect()},
                      {"truncated_at",
                       w.truncated_at() ? ordered_json(*w.truncated_at()) : ordered_json(nullptr)}};

    ordered_json checks;
    checks["sigma_positive"] = r.checks.positivity.sigma_positive;
    checks["sigma_prime_nonneg"] = {
        {"ok", r.checks.positivity.sigma_prime_nonneg},
        {"first_violation", r.checks.positivity.first_violation
                                ? ordered_json(*r.checks.positivity.first_violation)
                                : ordered_json(nullptr)},
        {"interval", {0.0, r.checks.positivity_interval_end}},
        {"note", "checked on [0, min(r_phi, r_work)]"}};
    checks["script_I_nondecreasing"] = {
        {"ok", r.checks.script_monotone.nondecreasing},
        {"first_violation", r.checks.script_monotone.first_violation
                                ? ordered_json(*r.checks.script_monotone.first_violation)
                                : ordered_json(nullptr)},
        {"margin_min", r.checks.script_monotone.margin_min}};
    checks["kneser"] = {{"guaranteed", r.checks.kneser.guaranteed},
                        {"sup_product", finite_or_token(r.checks.kneser.sup_product, "unbounded")},
                        {"arg_sup", r.checks.kneser.arg_sup},
                        {"reason", r.checks.kneser.reason}};
    checks["A_le_1"] = {{"ok", r.checks.A_le_1}, {"A", r.A.value}, {"arg_sup", r.A.arg_sup}};
    checks["proper_assumed"] = r.checks.proper_assumed;
    rep["hypothesis_checks"] = std::move(checks);

    ordered_json iso;
    iso["inf_I"] = {{"value", r.inf_ratio.value},
                    {"argmin", r.inf_ratio.argmin},
                    {"limit_governed", r.inf_ratio.limit_governed},
                    {"analytic_floor", opt_num(r.inf_ratio.analytic_floor)},
                    {"stationarity_gap", opt_num(r.inf_ratio.stationarity_gap)},
                    {"label", "upper estimate for the model Cheeger constant"}};
    ordered_json tail;
    tail["status"] = to_string(r.tail.kind);
    tail["value"] = r.tail.kind == TailKind::converged ? ordered_json(r.tail.value)
                                                       : ordered_json(nullptr);
    tail["witness"] =
        r.tail.kind == TailKind::divergent ? ordered_json(r.tail.witness) : ordered_json(nullptr);
    tail["r_reached"] = r.tail.r_reached;
    tail["window_ends"] = r.tail.window_ends;
    tail["window_contributions"] = r.tail.window_contributions;
    iso["integral_inv_I"] = std::move(tail);
    rep["isoperimetric"] = std::move(iso);

    ordered_json bounds;
    bounds["A"] = r.A.value;
    bounds["lambda_branch_integral"] = opt_num(r.lambda_branch_integral);
    bounds["lambda_branch_inf"] = r.lambda_branch_inf;
    bounds["lambda_branch_inf_floor"] = opt_num(r.lambda_branch_inf_floor);
    bounds["lambda_lower"] = r.lambda_lower;
    bounds["conditional"] = r.conditional;
    bounds["discrete_spectrum"] = to_string(r.discrete_spectrum);
    bounds["stochastically_incomplete_model"] = to_string(r.stochastically_incomplete_model);
    bounds["mean_exit_time_upper"] = opt_num(r.mean_exit_time_upper);
    bounds["not_l1_liouville"] = to_string(r.not_l1_liouville);
    bounds["mean_curvature"] = {{"verdict", to_string(r.mean_curvature.verdict)},
                                {"sup_ratio", r.mean_curvature.sup_ratio},
                                {"hyp_script_monotone", r.mean_curvature.hyp_script_monotone},
                                {"hyp_integrable", r.mean_curvature.hyp_integrable},
                                {"inv_I_to_zero", r.mean_curvature.inv_I_to_zero},
                                {"note", r.mean_curvature.note}};
    rep["bounds"] = std::move(bounds);

    ordered_json prov;
    for (const auto& [key, entry] : r.provenance)
        prov[key] = {{"method", entry.method}, {"needs", entry.needs}, {"inputs", entry.inputs}};
    rep["provenance"] = std::move(prov);

    j["report"] = std::move(rep);
    return j;
}

int exit_code_for(const EstimateReport& rep) {
    if (rep.conditional || rep.discrete_spectrum == Verdict3::hypotheses_violated) return 2;
    return 0;
}

void apply_sweep_value(Scenario& s, const std::string& param, double value) {
    ProfileConfig& p = s.profile;
    if (param == "k") {
        if (p.kind == ProfileKind::closed_form_sigma && p.sigma_family == SigmaFamily::hyperbolic) {
            p.k = value;
            return;
        }
        if (p.kind == ProfileKind::closed_form_G && p.g_family == GFamily::constant) {
            p.g_constant = value * value;
            return;
        }
        fail(Errc::unknown_parameter, "sweep: k applies to hyperbolic or constant-G profiles only");
    }
    if (param == "H0") {
        if (!p.h_constant) fail(Errc::unknown_parameter, "sweep: H0 needs a constant H envelope");
        p.h0 = value;
        return;
    }
    if (param == "r_phi") {
        p.r_phi = value;
        return;
    }
    if (param == "m") {
        p.m = static_cast<int>(value);
        return;
    }
    if (param == "l") {
        p.l = static_cast<int>(value);
        return;
    }
    auto indexed = [&](const std::string& prefix) -> int {
        if (param.rfind(prefix, 0) != 0) return -1;
        return std::stoi(param.substr(prefix.size()));
    };
    if (int i = indexed("poly_coeff:"); i >= 0) {
        if (static_cast<std::size_t>(i) >= p.p_coeffs.size()) p.p_coeffs.resize(i + 1, 0.0);
        p.p_coeffs[static_cast<std::size_t>(i)] = value;
        return;
    }
    if (int i = indexed("exp_coeff:"); i >= 0) {
        if (static_cast<std::size_t>(i) >= p.q_coeffs.size()) p.q_coeffs.resize(i + 1, 0.0);
        p.q_coeffs[static_cast<std::size_t>(i)] = value;
        return;
    }
    if (int i = indexed("g_coeff:"); i >= 0) {
        if (static_cast<std::size_t>(i) >= p.g_coeffs.size()) p.g_coeffs.resize(i + 1, 0.0);
        p.g_coeffs[static_cast<std::size_t>(i)] = value;
        return;
    }
    fail(Errc::unknown_parameter, "sweep: unknown parameter " + param);
}

std::string run_sweep_csv(const Scenario& base, const SweepSpec& spec, Exec exec) {
    if (spec.values.empty()) fail(Errc::invalid_argument, "sweep: empty value list");
    {
        Scenario probe = base;  // reject unknown parameters before spawning workers
        apply_sweep_value(probe, spec.param, spec.values.front());
    }

    std::vector<std::string> rows(spec.values.size());
    const bool par = exec == Exec::parallel;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (par)
#endif
    for (long i = 0; i < static_cast<long>(spec.values.size()); ++i) {
        Scenario s = base;
        std::ostringstream row;
        try {
            apply_sweep_value(s, spec.param, spec.values[static_cast<std::size_t>(i)]);
            Pipeline pl = run_analysis(s, Exec::serial);  // rows are the parallel unit
            const EstimateReport& r = pl.report;
            row << spec.param << ',';
            double val = spec.values[static_cast<std::size_t>(i)];
            row << (std::isfinite(val) ? fmt(val) : "inf") << ',';
            row << r.effective_dim << ',';
            row << fmt(r.lambda_lower) << ',';
            row << (r.lambda_branch_integral ? fmt(*r.lambda_branch_integral) : "") << ',';
            row << fmt(r.lambda_branch_inf) << ',';
            row << fmt(r.inf_ratio.value) << ',';
            row << fmt(r.A.value) << ',';
            if (r.mean_exit_time_upper)
                row << fmt(*r.mean_exit_time_upper);
            else
                row << to_string(r.tail.kind);
            row << ',';
            row << to_string(r.tail.kind) << ',';
            row << to_string(r.discrete_spectrum) << ',';
            row << to_string(r.stochastically_incomplete_model) << ',';
            row << (r.checks.structural_ok() ? "true" : "false");
        } catch (const Error& e) {
            row.str("");
            row << spec.param << ',' << fmt(spec.values[static_cast<std::size_t>(i)])
                << ",error:" << errc_name(e.code()) << ",,,,,,,,,,";
        } catch (const std::exception&) {
            row.str("");
            row << spec.param << ',' << fmt(spec.values[static_cast<std::size_t>(i)])
                << ",error:Internal,,,,,,,,,,";
        }
        rows[static_cast<std::size_t>(i)] = row.str();
    }

    std::ostringstream out;
    out << "param,value,effective_dim,lambda_lower,lambda_branch_integral,lambda_branch_inf,"
           "inf_I,A,mean_exit_time_upper,tail_status,discrete_spectrum,"
           "stochastically_incomplete_model,hypotheses_ok\n";
    for (const auto& row : rows) out << row << '\n';
    return out.str();
}

std::vector<SimulateRow> run_simulation(const Scenario& s, const Pipeline& p, Exec exec,
                                        std::vector<std::vector<double>>* taus_out,
                                        std::vector<std::vector<std::uint8_t>>* censored_out) {
    if (s.mc.R_list.empty()) fail(Errc::invalid_argument, "simulate: mc.R_list is empty");
    std::vector<SimulateRow> rows;
    int d = p.report.effective_dim;
    for (double R : s.mc.R_list) {
        double expected = exit_time_profile(*p.table, R) - exit_time_profile(*p.table, s.mc.rho0);
        McParams params;
        params.R = R;
        params.rho0 = s.mc.rho0;
        params.n_paths = s.mc.n_paths;
        params.dt = s.mc.dt;
        params.seed = s.mc.seed;
        params.antithetic = s.mc.antithetic;
        params.t_cap = s.mc.t_cap > 0.0
                           ? s.mc.t_cap
                           : s.mc.t_cap_factor * std::max(expected, 100.0 * s.mc.dt);
        std::vector<double> taus;
        std::vector<std::uint8_t> cens;
        SimulateRow row;
        row.estimate = simulate_exit_time(*p.warping, d, params, exec,
                                          taus_out ? &taus : nullptr,
                                          censored_out ? &cens : nullptr);
        row.expected = expected;
        row.tolerance = std::max(3.0 * row.estimate.stderr_tau, 0.005);
        row.pass = std::abs(row.estimate.mean_tau - expected) <= row.tolerance;
        rows.push_back(row);
        if (taus_out) taus_out->push_back(std::move(taus));
        if (censored_out) censored_out->push_back(std::move(cens));
    }
    return rows;
}

ordered_json simulate_to_json(const std::vector<SimulateRow>& rows) {
    ordered_json arr = ordered_json::array();
    for (const auto& row : rows) {
        arr.push_back({{"R", row.estimate.R},
                       {"rho0", row.estimate.rho0},
                       {"n_paths", row.estimate.n_paths},
                       {"dt", row.estimate.dt},
                       {"seed", row.estimate.seed},
                       {"t_cap", row.estimate.t_cap},
                       {"mean_tau", row.estimate.mean_tau},
                       {"stderr_tau", row.estimate.stderr_tau},
                       {"n_censored", row.estimate.n_censored},
                       {"lower_bound_only", row.estimate.lower_bound_only},
                       {"expected_F_delta", row.expected},
                       {"tolerance", row.tolerance},
                       {"pass", row.pass}});
    }
    return arr;
}

}  // namespace warpspec
