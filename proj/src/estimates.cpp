#include "warpspec/estimates.hpp"

#include <algorithm>
#include <cmath>

namespace warpspec {

const char* to_string(Verdict3 v) {
    switch (v) {
        case Verdict3::yes: return "yes";
        case Verdict3::no_inference: return "no-inference";
        case Verdict3::hypotheses_violated: return "hypotheses-violated";
    }
    return "?";
}

const char* to_string(StochasticClass s) {
    switch (s) {
        case StochasticClass::incomplete: return "incomplete";
        case StochasticClass::complete: return "complete";
        case StochasticClass::inconclusive: return "inconclusive";
        case StochasticClass::not_applicable_finite_radius: return "not-applicable-finite-radius";
    }
    return "?";
}

const char* to_string(McoVerdict v) {
    switch (v) {
        case McoVerdict::not_applicable: return "not-applicable";
        case McoVerdict::incompatible_with_completeness:
            return "incompatible-with-stochastic-completeness";
        case McoVerdict::no_obstruction: return "no-obstruction";
    }
    return "?";
}

const char* to_string(TailKind k) {
    switch (k) {
        case TailKind::converged: return "converged";
        case TailKind::divergent: return "divergent";
        case TailKind::inconclusive: return "inconclusive";
    }
    return "?";
}

SupRatio compute_A(const RatioTable& t, const HEnvelope& H, double R, const InfIResult& inf_res) {
    SupRatio res;
    if (H.is_constant()) {
        res.value = H.constant_value() / inf_res.value;
        res.arg_sup = inf_res.argmin;
        return res;
    }
    const auto& g = t.grid();
    double best = 0.0, best_r = 0.0;
    std::size_t best_k = 1;
    for (std::size_t k = 1; k < g.size() && g[k] <= R; ++k) {
        double ratio = H(g[k]) / t.I_samples()[k];
        if (ratio > best) {
            best = ratio;
            best_r = g[k];
            best_k = k;
        }
    }
    std::size_t lo_i = best_k >= 3 ? best_k - 2 : 1;
    std::size_t hi_i = std::min(best_k + 2, g.size() - 1);
    double neg;
    double arg = golden_min([&](double r) { return -H(r) / t.I(r); }, g[lo_i],
                            std::min(g[hi_i], R), 1e-9 * std::max(1.0, R), &neg);
    if (-neg > best) {
        best = -neg;
        best_r = arg;
    }
    res.value = best;
    res.arg_sup = best_r;
    return res;
}

Verdict3 discreteness_verdict(const TailStatus& tail, double A, bool proper_assumed) {
    if (A >= 1.0) return Verdict3::hypotheses_violated;
    if (proper_assumed && tail.kind == TailKind::converged) return Verdict3::yes;
    return Verdict3::no_inference;
}

std::pair<StochasticClass, std::optional<double>> stochastic_and_exit_time(const TailStatus& tail,
                                                                           double r_phi) {
    std::optional<double> e_upper;
    if (tail.kind == TailKind::converged) e_upper = tail.value;
    if (std::isfinite(r_phi))
        return {StochasticClass::not_applicable_finite_radius, e_upper};
    switch (tail.kind) {
        case TailKind::converged: return {StochasticClass::incomplete, e_upper};
        case TailKind::divergent: return {StochasticClass::complete, std::nullopt};
        case TailKind::inconclusive: return {StochasticClass::inconclusive, std::nullopt};
    }
    return {StochasticClass::inconclusive, std::nullopt};
}

MeanCurvatureVerdict mean_curvature_obstruction(const RatioTable& t, const TailStatus& tail,
                                                double r_phi, const SupRatio& A,
                                                bool script_monotone_ok) {
    MeanCurvatureVerdict v;
    v.sup_ratio = A.value;
    v.hyp_script_monotone = script_monotone_ok;
    v.hyp_integrable = tail.kind == TailKind::converged;

    if (!std::isfinite(r_phi)) {
        // does I^-1 -> 0 at the far end of the window?
        double R = t.r_max();
        double j_end = t.inv_I(R);
        double j_mid = t.inv_I(0.9 * R);
        double j_max = 0.0;
        for (std::size_t k = 1; k < t.grid().size(); ++k)
            j_max = std::max(j_max, 1.0 / t.I_samples()[k]);
        v.inv_I_to_zero = j_end < 0.01 * j_max && j_end < 0.9 * j_mid;
    }

    if (!v.hyp_script_monotone || !v.hyp_integrable) {
        v.verdict = McoVerdict::not_applicable;
        v.note = !v.hyp_integrable
                     ? "inverse-ratio integral not known finite; obstruction theorem silent"
                     : "homogeneous ratio not nondecreasing; obstruction theorem silent";
        return v;
    }
    if (A.value < 1.0) {
        v.verdict = McoVerdict::incompatible_with_completeness;
        v.note =
            "a stochastically complete immersion needs sup |H|/I >= 1; this envelope stays below 1";
        if (v.inv_I_to_zero)
            v.note += "; moreover I^-1 -> 0, so bounded |H| forces stochastic incompleteness";
    } else {
        v.verdict = McoVerdict::no_obstruction;
        v.note = "necessary condition sup |H|/I >= 1 is met; no contradiction detected";
    }
    return v;
}

int product_reduce(const ProfileSpec& p) {
    int d = p.m() - p.l();
    if (p.l() > 0 && d < 1) fail(Errc::dimension_mismatch, "product reduction needs m >= l + 1");
    if (d < 2)
        fail(Errc::dimension_mismatch,
             "effective dimension m - l = " + std::to_string(d) +
                 " degenerates the ratio machinery (d >= 2 required)");
    return d;
}

EstimateReport assemble_report(const ProfileSpec& p, const RatioTable& t,
                               const Assumptions& assume, double classify_tol) {
    EstimateReport rep;
    rep.m = p.m();
    rep.l = p.l();
    rep.effective_dim = t.dim();
    rep.r_phi = p.r_phi();
    rep.r_work = t.r_max();

    const WarpingFunction& w = t.warping();
    double r_check = std::min(p.r_phi(), w.valid_r_max());

    rep.checks.positivity = check_positivity_monotonicity(w, r_check);
    rep.checks.positivity_interval_end = r_check;
    rep.checks.script_monotone = check_script_I_monotone(t, r_check);
    rep.checks.kneser = kneser_check(p, std::isfinite(p.r_phi()) ? p.r_phi() : t.r_max());
    rep.checks.proper_assumed = assume.proper;

    rep.inf_ratio = inf_I(t, std::min(p.r_phi(), t.r_max()), p.r_phi_infinite());
    rep.tail = integral_inv_I(t, p.r_phi(), classify_tol);
    rep.A = compute_A(t, p.H(), std::min(p.r_phi(), t.r_max()), rep.inf_ratio);
    rep.checks.A_le_1 = rep.A.value <= 1.0;

    double one_minus_A = std::max(0.0, 1.0 - rep.A.value);
    rep.lambda_branch_inf = sqr(one_minus_A) * sqr(rep.inf_ratio.value) / 4.0;
    if (rep.tail.kind == TailKind::converged && rep.tail.value > 0.0)
        rep.lambda_branch_integral = one_minus_A / rep.tail.value;
    if (p.H().is_constant() && rep.inf_ratio.analytic_floor) {
        double floor = *rep.inf_ratio.analytic_floor;
        if (floor > 0.0) {
            double af = p.H().constant_value() / floor;
            rep.lambda_branch_inf_floor = sqr(std::max(0.0, 1.0 - af)) * sqr(floor) / 4.0;
        }
    }
    rep.lambda_lower = std::max(rep.lambda_branch_inf,
                                rep.lambda_branch_integral ? *rep.lambda_branch_integral : 0.0);
    rep.conditional = !rep.checks.structural_ok();

    rep.discrete_spectrum = discreteness_verdict(rep.tail, rep.A.value, assume.proper);
    auto [sclass, e_upper] = stochastic_and_exit_time(rep.tail, p.r_phi());
    rep.stochastically_incomplete_model = sclass;
    rep.mean_exit_time_upper = e_upper;
    rep.mean_curvature = mean_curvature_obstruction(t, rep.tail, p.r_phi(), rep.A,
                                                    rep.checks.script_monotone.nondecreasing);
    if (assume.stochastically_complete_M &&
        rep.mean_curvature.verdict == McoVerdict::incompatible_with_completeness)
        rep.mean_curvature.note +=
            "; the declared stochastic completeness of M contradicts this envelope";

    bool minimal = assume.minimal || p.H().is_zero();
    rep.not_l1_liouville = (minimal && rep.checks.script_monotone.nondecreasing &&
                            rep.tail.kind == TailKind::converged)
                               ? Verdict3::yes
                               : Verdict3::no_inference;

    auto hyp_list = [&](bool with_proper) {
        std::vector<std::string> v{"sigma_prime_nonneg", "script_I_nondecreasing", "A_le_1"};
        if (with_proper) v.push_back("proper_assumed");
        return v;
    };
    rep.provenance["A"] = {"supremum of the curvature envelope over the isoperimetric ratio",
                           {},
                           "H envelope, I_d on [0, r_work]"};
    rep.provenance["lambda_branch_inf"] = {
        "divergence-field lower bound: (1-A)^2 inf(I_d)^2 / 4", hyp_list(false),
        "A, inf I_d over [0, min(r_phi, r_work)]"};
    if (rep.lambda_branch_integral)
        rep.provenance["lambda_branch_integral"] = {
            "positive-supersolution lower bound: (1-A) / integral of I_d^-1", hyp_list(false),
            "A, converged integral of I_d^-1"};
    rep.provenance["lambda_lower"] = {"max over the available branches", hyp_list(false), ""};
    if (rep.mean_exit_time_upper)
        rep.provenance["mean_exit_time_upper"] = {
            "radial exit-moment comparison: integral of I_d^-1",
            {"minimal_or_H0_zero", "script_I_nondecreasing", "integral_converged"},
            "converged integral of I_d^-1 over (0, r_phi)"};
    rep.provenance["discrete_spectrum"] = {
        "exhaustion criterion from a proper bounded supersolution",
        {"proper_assumed", "integral_converged", "A_lt_1"},
        "tail status, A"};
    rep.provenance["stochastically_incomplete_model"] = {
        "model incompleteness equivalent to integrability of I_d^-1 (unbounded case)",
        {"r_phi_infinite"},
        "tail status"};
    rep.provenance["mean_curvature_verdict"] = {
        "necessary condition sup |H|/I_d >= 1 for stochastically complete immersions",
        {"script_I_nondecreasing", "integral_converged", "M_stochastically_complete"},
        "A, tail status"};
    if (rep.not_l1_liouville == Verdict3::yes)
        rep.provenance["not_l1_liouville"] = {
            "finite global exit moment rules out the L1-Liouville property",
            {"minimal_or_H0_zero", "script_I_nondecreasing", "integral_converged"},
            "tail status"};
    if (p.l() > 0)
        rep.provenance["effective_dim"] = {
            "product reduction: all ratios evaluated at dimension m - l",
            {"m_ge_l_plus_1"},
            "m, l"};
    return rep;
}

}  // namespace warpspec
