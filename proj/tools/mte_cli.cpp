// Command-line driver: simulate synthetic populations, run the two-stage
// estimation with bootstrap bands, produce diagnostics, and evaluate reform
// scenarios. All artifacts are CSV (plus an SVG curve plot and a JSON
// summary) written atomically; nothing is left behind on failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mte/bootstrap.hpp"
#include "mte/config.hpp"
#include "mte/counterfactual.hpp"
#include "mte/diagnostics.hpp"
#include "mte/gcv.hpp"
#include "mte/population.hpp"
#include "mte/svg.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", x);
    return buf;
}

struct CliOptions {
    std::string config_path;
    std::string input_path;
    std::string out_dir = "out";
    std::optional<long long> seed;
    std::optional<int> knots;
    std::optional<std::string> window;
    std::optional<int> boot;
    bool truth = false;
};

mte::Config load_config(const CliOptions& opt) {
    if (opt.config_path.empty()) return mte::Config::parse_string("", "<empty>");
    return mte::Config::parse_file(opt.config_path);
}

mte::EstimatorSpec estimator_spec(const mte::Config& cfg, const CliOptions& opt) {
    mte::EstimatorSpec spec = mte::estimator_from_config(cfg);
    if (opt.knots) spec.knots = *opt.knots;
    if (opt.window) std::tie(spec.window_lo, spec.window_hi) = mte::parse_window(*opt.window);
    spec.validate();
    return spec;
}

std::uint64_t run_seed(const mte::Config& cfg, const CliOptions& opt) {
    if (opt.seed) return static_cast<std::uint64_t>(*opt.seed);
    return static_cast<std::uint64_t>(cfg.get_num("run", "seed", 1.0));
}

mte::Dataset load_input(const mte::Config& cfg, const CliOptions& opt) {
    std::string path = opt.input_path;
    if (path.empty()) path = cfg.get_str("run", "input", "");
    if (path.empty()) throw mte::ConfigError("no input dataset: pass --in PATH or set [run] input");
    return mte::read_dataset(path);
}

// Artifacts are staged in memory and written together once the whole
// pipeline has succeeded.
class ArtifactSet {
public:
    explicit ArtifactSet(std::string dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string contents) {
        files_.emplace_back(name, std::move(contents));
    }

    void commit() {
        fs::create_directories(dir_);
        for (const auto& [name, contents] : files_) {
            mte::atomic_write_file((fs::path(dir_) / name).string(), contents);
        }
    }

private:
    std::string dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string curve_csv(const mte::MTECurve& curve, const mte::BootstrapResult* boot) {
    std::ostringstream out;
    out << "F,mte,lo95,hi95\n";
    for (std::size_t k = 0; k < curve.f.size(); ++k) {
        out << fmt(curve.f[k]) << ',' << fmt(curve.mte[k]) << ',';
        if (boot) out << fmt(boot->lo95[k]);
        out << ',';
        if (boot) out << fmt(boot->hi95[k]);
        out << '\n';
    }
    return out.str();
}

std::string first_stage_csv(const mte::EstimationResult& res) {
    std::ostringstream out;
    out << "term,estimate\n";
    const auto names = res.first_stage.coefficient_names();
    const Eigen::VectorXd coef = res.first_stage.coefficients();
    for (std::size_t j = 0; j < names.size(); ++j) {
        out << names[j] << ',' << fmt(coef[static_cast<Eigen::Index>(j)]) << '\n';
    }
    out << "log_likelihood," << fmt(res.first_stage.log_likelihood) << '\n';
    return out.str();
}

std::string second_stage_csv(const mte::SecondStageModel& model) {
    std::ostringstream out;
    out << "term,estimate\n";
    for (std::size_t j = 0; j < model.x_beta.size(); ++j) {
        out << model.x_beta[j].name() << ',' << fmt(model.beta[static_cast<Eigen::Index>(j)]) << '\n';
    }
    for (std::size_t j = 0; j < model.x_lambda.size(); ++j) {
        out << "[" << model.x_lambda[j].name() << "-mean]*F,"
            << fmt(model.lambda[static_cast<Eigen::Index>(j)]) << '\n';
    }
    for (std::size_t j = 0; j < model.g_coeffs.size(); ++j) {
        out << "g" << (j + 1) << ',' << fmt(model.g_coeffs[j]) << '\n';
    }
    for (std::size_t j = 0; j < model.basis.knots().size(); ++j) {
        out << "knot" << (j + 1) << ',' << fmt(model.basis.knots()[j]) << '\n';
    }
    out << "sigma2," << fmt(model.sigma2) << '\n';
    return out.str();
}

json summary_json(const mte::EstimationResult& res, const mte::BootstrapResult* boot) {
    json j;
    if (res.wage) {
        json w;
        w["mode"] = res.wage->mode == mte::WageMode::Ols ? "ols" : "heckman";
        w["workers_used"] = res.wage->workers_used;
        w["selection_fallback"] = res.wage->selection_fallback;
        w["sigma2"] = res.wage->sigma2;
        json coefs;
        for (std::size_t k = 0; k < res.wage->features.size(); ++k) {
            coefs[res.wage->features[k].name()] = res.wage->gamma[static_cast<Eigen::Index>(k)];
        }
        if (res.wage->mode == mte::WageMode::SelectionAdjusted && !res.wage->selection_fallback) {
            coefs["inv_mills"] = res.wage->mills_coefficient;
        }
        w["coefficients"] = coefs;
        j["wage"] = w;
    }
    {
        json idx;
        for (std::size_t k = 0; k < res.index.columns.size(); ++k) {
            idx[res.index.columns[k]] = res.index.weights[k];
        }
        j["instrument_index_weights"] = idx;
    }
    {
        json fs_block;
        const auto names = res.first_stage.coefficient_names();
        const Eigen::VectorXd coef = res.first_stage.coefficients();
        json coefs;
        for (std::size_t k = 0; k < names.size(); ++k) coefs[names[k]] = coef[static_cast<Eigen::Index>(k)];
        fs_block["coefficients"] = coefs;
        fs_block["log_likelihood"] = res.first_stage.log_likelihood;
        fs_block["iterations"] = res.first_stage.iterations;
        j["first_stage"] = fs_block;
    }
    {
        json ss;
        ss["knots"] = res.second_stage.basis.knots();
        ss["g"] = res.second_stage.g_coeffs;
        ss["sigma2"] = res.second_stage.sigma2;
        ss["window"] = {res.second_stage.window_lo, res.second_stage.window_hi};
        j["second_stage"] = ss;
    }
    j["dropped_columns"] = res.dropped_columns;
    if (boot) {
        json b;
        b["requested"] = boot->replicates_requested;
        b["converged"] = boot->converged();
        b["failures"] = boot->failures.size();
        b["point_outside_band"] = boot->point_outside_band;
        j["bootstrap"] = b;
    }
    return j;
}

int cmd_simulate(const CliOptions& opt) {
    const mte::Config cfg = load_config(opt);
    mte::PopulationSpec spec = mte::population_from_config(cfg);
    if (opt.seed) spec.seed = static_cast<std::uint64_t>(*opt.seed);
    const mte::Dataset data = mte::simulate_population(spec);

    ArtifactSet artifacts(opt.out_dir);
    artifacts.add("dataset.csv", mte::dataset_to_csv(data));
    if (opt.truth) {
        const auto [wlo, whi] = cfg.has("estimate", "window")
                                    ? mte::parse_window(cfg.require_str("estimate", "window"))
                                    : std::pair<double, double>{0.25, 0.66};
        std::vector<double> grid;
        for (int k = 0; k < 41; ++k) grid.push_back(wlo + (whi - wlo) * k / 40.0);
        const mte::TrueMteCurve truth = mte::true_mte_curve(spec, grid);
        std::ostringstream out;
        out << "P,true_mte\n";
        for (std::size_t k = 0; k < truth.p.size(); ++k) {
            out << fmt(truth.p[k]) << ',' << fmt(truth.mte[k]) << '\n';
        }
        artifacts.add("true_mte.csv", out.str());
    }
    artifacts.commit();
    return 0;
}

int cmd_estimate(const CliOptions& opt, bool with_bootstrap) {
    const mte::Config cfg = load_config(opt);
    const mte::Dataset data = load_input(cfg, opt);
    const mte::EstimatorSpec spec = estimator_spec(cfg, opt);

    const mte::EstimationResult res = mte::run_estimation(data, spec);
    std::optional<mte::BootstrapResult> boot;
    if (with_bootstrap) {
        const int B = opt.boot ? *opt.boot : cfg.get_int("bootstrap", "replicates", 500);
        boot = mte::block_bootstrap(data, spec, B, run_seed(cfg, opt), res.curve);
    }

    mte::MTECurve curve = res.curve;
    if (boot) {
        curve.lo95 = boot->lo95;
        curve.hi95 = boot->hi95;
    }

    ArtifactSet artifacts(opt.out_dir);
    artifacts.add("mte_curve.csv", curve_csv(res.curve, boot ? &*boot : nullptr));
    artifacts.add("first_stage.csv", first_stage_csv(res));
    artifacts.add("second_stage.csv", second_stage_csv(res.second_stage));
    artifacts.add("mte_curve.svg", mte::curve_to_svg(curve));
    artifacts.add("summary.json", summary_json(res, boot ? &*boot : nullptr).dump(2) + "\n");
    artifacts.commit();
    return 0;
}

int cmd_diagnose(const CliOptions& opt) {
    const mte::Config cfg = load_config(opt);
    const mte::Dataset data = load_input(cfg, opt);
    const mte::EstimatorSpec spec = estimator_spec(cfg, opt);

    const mte::EstimationResult fs = mte::run_first_stage(data, spec);

    std::ostringstream out;
    out << "section,key,value\n";

    for (auto seg_kind : {mte::Segmentation::Terciles, mte::Segmentation::Quartiles}) {
        const mte::SegmentStrength strength = mte::segment_f_stats(
            fs.imputed, fs.f_hat, fs.first_stage.x_features, fs.first_stage.z_features, seg_kind);
        const std::string name = seg_kind == mte::Segmentation::Terciles ? "tercile" : "quartile";
        for (std::size_t s = 0; s < strength.segments.size(); ++s) {
            const auto& seg = strength.segments[s];
            out << "segment_f_" << name << ',' << "segment" << (s + 1) << "_F," << fmt(seg.f_stat) << '\n';
            out << "segment_f_" << name << ',' << "segment" << (s + 1) << "_n," << seg.n << '\n';
            if (seg.underpowered) {
                out << "segment_f_" << name << ',' << "segment" << (s + 1) << "_underpowered,1\n";
            }
        }
    }

    {
        std::vector<int> candidates = {3, 4, 5, 6};
        if (cfg.has("diagnose", "gcv_knots")) {
            candidates.clear();
            for (const auto& item : cfg.get_list("diagnose", "gcv_knots")) candidates.push_back(std::stoi(item));
        }
        const std::vector<mte::Feature> x_beta = mte::prune_features(fs.imputed, mte::default_x_beta(), nullptr);
        std::vector<mte::Feature> x_lambda;
        for (const auto& f : mte::default_x_lambda(spec)) {
            const std::vector<double> col = mte::evaluate_feature(fs.imputed, f);
            if (!std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); })) {
                x_lambda.push_back(f);
            }
        }
        const mte::GcvReport gcv = mte::gcv_select(fs.imputed, fs.f_hat, x_beta, x_lambda,
                                                   candidates, spec.window_lo, spec.window_hi);
        for (const auto& cand : gcv.candidates) {
            out << "gcv,J" << cand.knots << (cand.skipped ? "_skipped,1" : "_score," + fmt(cand.gcv)) << '\n';
        }
        out << "gcv,selected," << gcv.selected_knots << '\n';
    }

    {
        const std::string z_col = cfg.get_str("diagnose", "gps_z", "z_index");
        const int degree = cfg.get_int("diagnose", "gps_degree", 1);
        const std::vector<std::string> x_cols =
            cfg.has("diagnose", "gps_covariates")
                ? cfg.get_list("diagnose", "gps_covariates")
                : std::vector<std::string>{"age", "black", "family_size", "kids_under6",
                                           "unemp_rate", "fs_guarantee"};
        const mte::GpsBalanceReport gps = mte::gps_balance(fs.imputed, z_col, x_cols, degree);
        out << "gps_balance,tests," << gps.tests << '\n';
        out << "gps_balance,significant_raw," << gps.significant_raw << '\n';
        out << "gps_balance,significant_adjusted," << gps.significant_adjusted << '\n';
    }

    ArtifactSet artifacts(opt.out_dir);
    artifacts.add("diagnostics.csv", out.str());
    artifacts.commit();
    return 0;
}

int cmd_counterfactual(const CliOptions& opt) {
    const mte::Config cfg = load_config(opt);
    const mte::Dataset data = load_input(cfg, opt);
    const mte::EstimatorSpec spec = estimator_spec(cfg, opt);
    const std::string base_dir =
        opt.config_path.empty() ? "" : fs::path(opt.config_path).parent_path().string();
    const std::vector<mte::ReformScenario> scenarios = mte::scenarios_from_config(cfg, base_dir);
    if (scenarios.empty()) throw mte::ConfigError("counterfactual: no scenarios configured");

    const mte::EstimationResult res = mte::run_estimation(data, spec);
    std::optional<mte::BootstrapResult> boot;
    const int B = opt.boot ? *opt.boot : cfg.get_int("bootstrap", "replicates", 0);
    if (B > 0) boot = mte::block_bootstrap(data, spec, B, run_seed(cfg, opt), res.curve);

    std::ostringstream out;
    out << "scenario,p_base,dP_demographics,dP_program,dP_residual,P,mte,lo95,hi95\n";
    for (const auto& scenario : scenarios) {
        const mte::ParticipationDecomposition dec =
            mte::participation_decomposition(res, data, scenario);
        const mte::ReformEffect eff = mte::mte_at_reform(res, data, scenario, boot ? &*boot : nullptr);
        out << scenario.label << ',' << fmt(dec.base) << ',' << fmt(dec.d_demographics) << ','
            << fmt(dec.d_program) << ',' << fmt(dec.d_residual) << ',' << fmt(dec.p_target) << ','
            << fmt(eff.mte) << ',';
        if (eff.lo95) out << fmt(*eff.lo95);
        out << ',';
        if (eff.hi95) out << fmt(*eff.hi95);
        out << '\n';
    }

    ArtifactSet artifacts(opt.out_dir);
    artifacts.add("counterfactual.csv", out.str());
    artifacts.commit();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"marginal labor-supply response toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    CliOptions opt;
    app.add_option("--config", opt.config_path, "configuration file");
    app.add_option("--seed", opt.seed, "seed override");
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--knots", opt.knots, "spline knot count override");
    app.add_option("--window", opt.window, "support window LO:HI override");
    app.add_option("--boot", opt.boot, "bootstrap replicate count override");
    app.add_option("--in", opt.input_path, "input dataset (overrides [run] input)");

    auto* sim = app.add_subcommand("simulate", "draw a synthetic population");
    sim->add_flag("--truth", opt.truth, "also write the oracle MTE curve");
    auto* est = app.add_subcommand("estimate", "two-stage estimation, point curve only");
    auto* boot = app.add_subcommand("bootstrap", "estimation with block-bootstrap bands");
    auto* diag = app.add_subcommand("diagnose", "instrument strength, GCV, GPS balance");
    auto* cf = app.add_subcommand("counterfactual", "reform decomposition and MTE at targets");

    CLI11_PARSE(app, argc, argv);

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (sim->parsed()) return cmd_simulate(opt);
        if (est->parsed()) return cmd_estimate(opt, false);
        if (boot->parsed()) return cmd_estimate(opt, true);
        if (diag->parsed()) return cmd_diagnose(opt);
        if (cf->parsed()) return cmd_counterfactual(opt);
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        err["stage"] = stage;
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 1;
    }
    return 2;
}
