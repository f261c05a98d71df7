#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "warpspec/profile.hpp"
#include "warpspec/ratios.hpp"
#include "warpspec/warping.hpp"

namespace warpspec {

enum class Verdict3 { yes, no_inference, hypotheses_violated };
enum class StochasticClass { incomplete, complete, inconclusive, not_applicable_finite_radius };
enum class McoVerdict { not_applicable, incompatible_with_completeness, no_obstruction };

const char* to_string(Verdict3 v);
const char* to_string(StochasticClass s);
const char* to_string(McoVerdict v);
const char* to_string(TailKind k);

struct Assumptions {
    bool proper = false;
    bool minimal = false;
    bool stochastically_complete_M = false;
};

struct SupRatio {
    double value = 0.0;
    double arg_sup = 0.0;
};

struct HypothesisChecks {
    PositivityReport positivity;
    double positivity_interval_end = 0.0;  // checked on [0, min(r_phi, r_cap)]
    MonotoneReport script_monotone;
    KneserResult kneser;
    bool A_le_1 = true;
    bool proper_assumed = false;

    bool structural_ok() const {
        return positivity.sigma_positive && positivity.sigma_prime_nonneg &&
               script_monotone.nondecreasing && A_le_1;
    }
};

struct MeanCurvatureVerdict {
    McoVerdict verdict = McoVerdict::not_applicable;
    double sup_ratio = 0.0;
    bool hyp_script_monotone = false;
    bool hyp_integrable = false;
    bool inv_I_to_zero = false;  // unbounded image and I^-1 -> 0: bounded |H| needs incompleteness
    std::string note;
};

struct ProvenanceEntry {
    std::string method;
    std::vector<std::string> needs;  // hypothesis flags this number leans on
    std::string inputs;
};

struct EstimateReport {
    int m = 2, l = 0, effective_dim = 2;
    double r_phi = kInf;
    double r_work = 0.0;

    SupRatio A;
    HypothesisChecks checks;
    InfIResult inf_ratio;
    TailStatus tail;

    std::optional<double> lambda_branch_integral;  // absent when the integral diverges
    double lambda_branch_inf = 0.0;
    std::optional<double> lambda_branch_inf_floor;  // analytic-floor variant (constant H only)
    double lambda_lower = 0.0;
    bool conditional = false;  // some structural hypothesis failed; bounds are not theorem output

    Verdict3 discrete_spectrum = Verdict3::no_inference;
    StochasticClass stochastically_incomplete_model = StochasticClass::inconclusive;
    std::optional<double> mean_exit_time_upper;
    MeanCurvatureVerdict mean_curvature;
    Verdict3 not_l1_liouville = Verdict3::no_inference;

    std::map<std::string, ProvenanceEntry> provenance;
};

// sup of H(r)/I_d(r) over (0, R]; for constant H this is H0 / inf I.
SupRatio compute_A(const RatioTable& t, const HEnvelope& H, double R, const InfIResult& inf_res);

Verdict3 discreteness_verdict(const TailStatus& tail, double A, bool proper_assumed);

std::pair<StochasticClass, std::optional<double>> stochastic_and_exit_time(const TailStatus& tail,
                                                                           double r_phi);

MeanCurvatureVerdict mean_curvature_obstruction(const RatioTable& t, const TailStatus& tail,
                                                double r_phi, const SupRatio& A,
                                                bool script_monotone_ok);

// effective dimension m - l; rejects d < 2 (the ratio machinery degenerates)
int product_reduce(const ProfileSpec& p);

EstimateReport assemble_report(const ProfileSpec& p, const RatioTable& t,
                               const Assumptions& assume, double classify_tol = 1e-6);

}  // namespace warpspec
