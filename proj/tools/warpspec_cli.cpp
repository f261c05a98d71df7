#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "warpspec/scenario.hpp"

namespace {

using namespace warpspec;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// error messages are prefixed with the failing operation; map it to a module
std::string module_of(const std::string& msg) {
    static const std::pair<const char*, const char*> table[] = {
        {"make_profile", "profile"},    {"eval_G", "profile"},
        {"kneser_check", "profile"},    {"interpolation", "profile"},
        {"table abscissae", "profile"}, {"solve_sigma", "jacobi"},
        {"check_positivity", "jacobi"}, {"build_ratio_table", "isoperimetric"},
        {"riccati", "isoperimetric"},   {"exit_time_profile", "montecarlo"},
        {"simulate_exit_time", "montecarlo"}, {"scenario", "cli"},
        {"sweep", "cli"},               {"simulate", "cli"},
    };
    for (const auto& [prefix, module] : table)
        if (msg.rfind(prefix, 0) == 0) return module;
    return "cli";
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) fail(Errc::invalid_argument, "cannot open output file " + path);
    out << text;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text;
    else
        write_text(out_path, text);
}

void dump_tables(const Pipeline& pl, const std::string& dir) {
    fs::create_directories(dir.empty() ? "." : dir);
    fs::path base = dir.empty() ? "." : dir;
    {
        std::ofstream out(base / "warping.csv");
        pl.warping->dump_csv(out);
    }
    {
        std::ofstream out(base / "ratios.csv");
        pl.table->dump_csv(out);
    }
}

struct CommonOpts {
    std::string scenario_path, out_path;
    double tol = -1.0, r_cap = -1.0;
    int grid_points = -1;
    bool no_timings = false;
    bool serial = false;
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("scenario", o.scenario_path, "scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_path, "write output to this file instead of stdout");
    sub->add_option("--tol", o.tol, "override analysis.tol");
    sub->add_option("--r-cap", o.r_cap, "override analysis.r_cap");
    sub->add_option("--grid-points", o.grid_points, "override analysis.grid_points");
    sub->add_flag("--no-timings", o.no_timings, "omit wall-clock timings from the report");
    sub->add_flag("--serial", o.serial, "run kernels single-threaded (reference path)");
}

Scenario load_with_overrides(const CommonOpts& o) {
    Scenario s = load_scenario(o.scenario_path);
    if (o.tol > 0.0) s.analysis.tol = o.tol;
    if (o.r_cap > 0.0) s.analysis.r_cap = o.r_cap;
    if (o.grid_points > 0) s.analysis.grid_points = o.grid_points;
    if (o.no_timings) s.output.timings = false;
    return s;
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "inf")
            out.push_back(kInf);
        else
            out.push_back(std::stod(item));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "warpspec: spectral lower bounds, stochastic classification and exit-time estimates for "
        "radial curvature profiles"};
    app.require_subcommand(1);

    CommonOpts an, sw, si;
    std::string format, dump_dir = "", param, values_csv, paths_csv;
    std::uint64_t seed_override = 0;
    bool seed_set = false, want_dump = false;

    CLI::App* analyze = app.add_subcommand("analyze", "run the full estimate pipeline");
    add_common(analyze, an);
    analyze->add_option("--format", format, "json | csv | both (overrides output.format)");
    analyze->add_flag("--dump-tables", want_dump, "write warping.csv and ratios.csv");
    analyze->add_option("--dump-dir", dump_dir, "directory for table dumps (default: .)");

    CLI::App* sweep = app.add_subcommand("sweep", "run the pipeline over a parameter list");
    add_common(sweep, sw);
    sweep->add_option("--param", param, "k | H0 | r_phi | m | l | poly_coeff:<i> | exp_coeff:<i> | g_coeff:<i>")
        ->required();
    sweep->add_option("--values", values_csv, "comma-separated values; \"inf\" allowed")->required();

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo exit times for mc.R_list");
    add_common(simulate, si);
    simulate->add_option("--seed", seed_override, "override mc.seed")->each([&](const std::string&) {
        seed_set = true;
    });
    simulate->add_option("--paths-csv", paths_csv,
                         "write per-path exit times (one file per R, suffix _R<value>)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) {
            Scenario s = load_with_overrides(an);
            if (!format.empty()) s.output.format = format;
            if (want_dump) s.output.dump_tables = true;

            auto t0 = Clock::now();
            Pipeline pl = run_analysis(s, an.serial ? Exec::serial : Exec::parallel);
            double pipeline_ms = ms_since(t0);

            nlohmann::ordered_json rep = report_to_json(s, pl);
            if (s.output.timings) rep["timings_ms"] = {{"pipeline", pipeline_ms}};

            if (s.output.dump_tables || s.output.format != "json") dump_tables(pl, dump_dir);
            if (s.output.format == "csv") {
                std::ostringstream os;
                pl.table->dump_csv(os);
                emit(an.out_path, os.str());
            } else {
                emit(an.out_path, rep.dump(2) + "\n");
            }
            return exit_code_for(pl.report);
        }

        if (sweep->parsed()) {
            Scenario s = load_with_overrides(sw);
            SweepSpec spec{param, parse_values(values_csv)};
            std::string csv = run_sweep_csv(s, spec, sw.serial ? Exec::serial : Exec::parallel);
            emit(sw.out_path, csv);
            // a sweep never exits 0 if some row violated the hypotheses
            std::istringstream rows(csv);
            std::string line;
            std::getline(rows, line);  // header
            while (std::getline(rows, line))
                if (line.size() >= 6 && line.compare(line.size() - 6, 6, ",false") == 0) return 2;
            return 0;
        }

        if (simulate->parsed()) {
            Scenario s = load_with_overrides(si);
            if (seed_set) s.mc.seed = seed_override;

            auto t0 = Clock::now();
            Exec exec = si.serial ? Exec::serial : Exec::parallel;
            Pipeline pl = run_analysis(s, exec);
            std::vector<std::vector<double>> taus;
            std::vector<std::vector<std::uint8_t>> cens;
            auto rows = run_simulation(s, pl, exec, paths_csv.empty() ? nullptr : &taus,
                                       paths_csv.empty() ? nullptr : &cens);
            double total_ms = ms_since(t0);

            nlohmann::ordered_json rep = report_to_json(s, pl);
            rep["mc"] = simulate_to_json(rows);
            if (s.output.timings) rep["timings_ms"] = {{"total", total_ms}};
            emit(si.out_path, rep.dump(2) + "\n");

            if (!paths_csv.empty()) {
                for (std::size_t k = 0; k < rows.size(); ++k) {
                    char suffix[64];
                    std::snprintf(suffix, sizeof suffix, "_R%g.csv", rows[k].estimate.R);
                    fs::path p(paths_csv);
                    std::ofstream out(p.parent_path() / (p.stem().string() + suffix));
                    out << "path_index,tau,censored\n";
                    for (std::size_t i = 0; i < taus[k].size(); ++i) {
                        char buf[96];
                        std::snprintf(buf, sizeof buf, "%zu,%.17g,%d\n", i, taus[k][i],
                                      static_cast<int>(cens[k][i]));
                        out << buf;
                    }
                }
            }
            return exit_code_for(pl.report);
        }
    } catch (const Error& e) {
        std::cerr << "warpspec: [" << module_of(e.what()) << "] " << errc_name(e.code()) << ": "
                  << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "warpspec: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
