#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracpoisson/estimation.hpp"
#include "fracpoisson/experiment.hpp"
#include "fracpoisson/mittag_leffler.hpp"
#include "fracpoisson/process.hpp"
#include "fracpoisson/rates.hpp"
#include "fracpoisson/sampling.hpp"

namespace {

using nlohmann::json;

void print_json(const json& doc) { std::cout << doc.dump(2) << "\n"; }

std::uint64_t default_seed() {
    const char* env = std::getenv("FRACPOISSON_SEED");
    if (env == nullptr || *env == '\0') return 42;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == nullptr || *end != '\0')
        throw std::invalid_argument(
            "FRACPOISSON_SEED must be an unsigned decimal integer");
    return static_cast<std::uint64_t>(v);
}

double parse_nu_hat(const std::string& text) {
    if (text == "inf" || text == "+inf" || text == "infinity") return fracpoisson::kInf;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == nullptr || *end != '\0')
        throw std::invalid_argument("--nu-hat must be a number or the string 'inf'");
    return v;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out.good()) throw std::runtime_error("failed to write " + path);
}

struct MlArgs {
    double alpha = 0.0, beta = 0.0, gamma = 1.0, z = 0.0;
    bool log_scale = false;
};
struct PmfArgs {
    double nu = 0.0, t = 0.0;
    std::vector<double> lambda;
    std::vector<std::int64_t> k;
    std::int64_t sum = -1;
    bool has_sum = false;
};
struct MgfArgs {
    double nu = 0.0, t = 0.0;
    std::vector<double> lambda, theta;
};
struct MomentsArgs {
    double nu = 0.0, t = 0.0;
    std::vector<double> lambda;
};
struct RateVecArgs {
    double nu = 0.0;
    std::vector<double> lambda, x;
};
struct EstimateArgs {
    bool nu_unknown = false;
    double t = 0.0;
    std::vector<double> lambda;
    std::int64_t sum = 0;
};
struct RateJArgs {
    double nu0 = 0.0;
    std::vector<double> lambda;
    std::string nu_hat;
};
struct SampleArgs {
    double nu = 0.0, t = 0.0;
    std::vector<double> lambda;
    std::int64_t n = 10;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool sum_only = false;
    std::string format = "csv";
    std::string out_path;
};
struct ExperimentArgs {
    std::string config_path;
    std::string out_prefix;
};

int run_ml(const MlArgs& a) {
    fracpoisson::MLQuery q{a.alpha, a.beta, a.gamma, a.z};
    json doc;
    if (a.log_scale)
        doc["log_value"] = fracpoisson::detail::json_number(fracpoisson::log_mittag_leffler(q));
    else
        doc["value"] = fracpoisson::detail::json_number(
            fracpoisson::generalized_mittag_leffler(q));
    print_json(doc);
    return 0;
}

int run_pmf(const PmfArgs& a) {
    const fracpoisson::ModelParams params(a.nu, a.lambda);
    double log_pmf = 0.0;
    json doc;
    if (a.has_sum) {
        log_pmf = fracpoisson::marginal_sum_log_pmf(params, a.t, a.sum);
        doc["sum"] = a.sum;
    } else {
        const fracpoisson::LatticePoint point(a.k);
        log_pmf = fracpoisson::joint_log_pmf(params, a.t, point);
        doc["k"] = a.k;
    }
    doc["log_pmf"] = fracpoisson::detail::json_number(log_pmf);
    doc["pmf"] = fracpoisson::detail::json_number(std::exp(log_pmf));
    print_json(doc);
    return 0;
}

int run_mgf(const MgfArgs& a) {
    const fracpoisson::ModelParams params(a.nu, a.lambda);
    const double log_mgf = fracpoisson::log_mgf(params, a.t, a.theta);
    json doc;
    doc["log_mgf"] = fracpoisson::detail::json_number(log_mgf);
    doc["mgf"] = fracpoisson::detail::json_number(std::exp(log_mgf));
    print_json(doc);
    return 0;
}

int run_moments(const MomentsArgs& a) {
    const fracpoisson::ModelParams params(a.nu, a.lambda);
    const auto mean = fracpoisson::mean_vector(params, a.t);
    const auto cov = fracpoisson::covariance_matrix_C(params);
    json doc;
    doc["mean"] = mean;
    json rows = json::array();
    for (Eigen::Index j = 0; j < cov.entries.rows(); ++j) {
        json row = json::array();
        for (Eigen::Index k = 0; k < cov.entries.cols(); ++k)
            row.push_back(cov.entries(j, k));
        rows.push_back(row);
    }
    doc["covariance_limit"] = rows;
    print_json(doc);
    return 0;
}

int run_rate_ld(const RateVecArgs& a) {
    const fracpoisson::ModelParams params(a.nu, a.lambda);
    const auto eval = fracpoisson::rate_ld(params, a.x);
    json doc;
    doc["value"] = fracpoisson::detail::json_number(eval.value);
    if (eval.maximizer.has_value()) {
        json arr = json::array();
        for (double v : *eval.maximizer) arr.push_back(fracpoisson::detail::json_number(v));
        doc["maximizer"] = arr;
    } else {
        doc["maximizer"] = nullptr;
    }
    print_json(doc);
    return 0;
}

int run_rate_md(const RateVecArgs& a) {
    const fracpoisson::ModelParams params(a.nu, a.lambda);
    json doc;
    doc["value"] = fracpoisson::detail::json_number(fracpoisson::rate_md(params, a.x));
    print_json(doc);
    return 0;
}

int run_estimate(const EstimateArgs& a) {
    // nu is intentionally absent from the flags: the subcommand estimates it.
    const fracpoisson::ModelParams params(1.0, a.lambda);
    const auto result = fracpoisson::estimate_nu(params, a.t, a.sum);
    json doc;
    doc["nu_hat"] = fracpoisson::detail::json_number(result.nu_hat);
    doc["observed_rate"] = fracpoisson::detail::json_number(result.observed_rate);
    doc["iterations"] = result.solver_iterations;
    print_json(doc);
    return 0;
}

int run_rate_j(const RateJArgs& a) {
    const fracpoisson::ModelParams params(a.nu0, a.lambda);
    const double nu_hat = parse_nu_hat(a.nu_hat);
    json doc;
    doc["value"] =
        fracpoisson::detail::json_number(fracpoisson::rate_J(params, a.nu0, nu_hat));
    print_json(doc);
    return 0;
}

int run_sample(const SampleArgs& a) {
    const fracpoisson::ModelParams params(a.nu, a.lambda);
    const std::uint64_t seed = a.seed_given ? a.seed : default_seed();
    fracpoisson::detail::require_config(a.n >= 1, "sample: --n must be >= 1");
    fracpoisson::detail::require_config(a.format == "csv" || a.format == "json",
                                        "sample: --format must be csv or json");

    // Replication stream 0 of `seed`, matching the library's batch sampler.
    fracpoisson::SplitMix64 rng(fracpoisson::split_key(seed, 0));
    std::ostringstream csv;
    json draws = json::array();
    if (a.sum_only) {
        const fracpoisson::MarginalSampler sampler(params, a.t);
        csv << "sum\n";
        for (std::int64_t i = 0; i < a.n; ++i) {
            const std::int64_t s = sampler.draw(rng);
            if (a.format == "csv") csv << s << "\n";
            else draws.push_back(s);
        }
    } else {
        const fracpoisson::VectorSampler sampler(params, a.t);
        for (std::size_t i = 0; i < params.m(); ++i) csv << "k" << (i + 1) << ",";
        csv << "sum\n";
        for (std::int64_t i = 0; i < a.n; ++i) {
            const fracpoisson::LatticePoint point = sampler.draw(rng);
            if (a.format == "csv") {
                for (auto v : point.k) csv << v << ",";
                csv << point.sum << "\n";
            } else {
                draws.push_back(point.k);
            }
        }
    }

    std::string payload;
    if (a.format == "csv") {
        payload = csv.str();
    } else {
        json doc;
        doc["seed"] = seed;
        doc["sum_only"] = a.sum_only;
        doc["draws"] = draws;
        payload = doc.dump(2) + "\n";
    }
    if (a.out_path.empty()) std::cout << payload;
    else write_file(a.out_path, payload);
    return 0;
}

int run_experiment_cmd(const ExperimentArgs& a) {
    std::ifstream in(a.config_path, std::ios::binary);
    if (!in.good())
        throw std::invalid_argument("experiment: cannot open config file " + a.config_path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("experiment: config is not valid JSON: ") +
                                    e.what());
    }
    const auto spec = fracpoisson::parse_experiment_json(doc);
    const auto report = fracpoisson::run_experiment(spec.kind, spec.config);

    std::string prefix = a.out_prefix;
    if (prefix.empty()) {
        prefix = a.config_path;
        const auto dot = prefix.rfind(".json");
        if (dot != std::string::npos && dot == prefix.size() - 5) prefix.resize(dot);
        prefix += ".report";
    }
    write_file(prefix + ".csv", fracpoisson::report_to_csv(report));
    write_file(prefix + ".json", fracpoisson::report_to_json_string(report));
    print_json(fracpoisson::report_to_json(report));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "fracpoisson: numerical toolkit for the multivariate alternative fractional "
        "Poisson process M(t) with parameters nu in (0,1] and intensity vector lambda "
        "(per unit time). Outputs are JSON unless noted; infinities are serialized as "
        "the string \"inf\"."};
    app.require_subcommand(1);

    MlArgs ml_args;
    auto* ml = app.add_subcommand(
        "ml",
        "Evaluate the Mittag-Leffler function E_{alpha,beta}(z) = sum_{r>=0} z^r / "
        "Gamma(alpha r + beta), or its three-parameter (Prabhakar) form with rising-"
        "factorial weights when --gamma != 1.");
    ml->add_option("--alpha", ml_args.alpha, "first parameter alpha > 0")->required();
    ml->add_option("--beta", ml_args.beta, "second parameter beta > 0")->required();
    ml->add_option("--gamma", ml_args.gamma, "Prabhakar weight parameter (default 1)");
    ml->add_option("--z", ml_args.z, "argument z >= 0")->required();
    ml->add_flag("--log", ml_args.log_scale,
                 "print log E_{alpha,beta}(z) instead (requires gamma = 1)");

    PmfArgs pmf_args;
    auto* pmf = app.add_subcommand(
        "pmf",
        "Probability mass function. With --k: P(M(t) = k) = s(k)!/(prod k_i!) * "
        "prod(lambda_i/s(lambda))^{k_i} * (s(lambda) t^nu)^{s(k)} / Gamma(nu s(k) + 1) "
        "/ E_{nu,1}(s(lambda) t^nu). With --sum h: the law of the total s(M(t)).");
    pmf->add_option("--nu", pmf_args.nu, "fractional order nu in (0, 1]")->required();
    pmf->add_option("--lambda", pmf_args.lambda,
                    "comma-separated intensities lambda_i > 0 (per unit time)")
        ->required()
        ->delimiter(',');
    pmf->add_option("--t", pmf_args.t, "time horizon t > 0")->required();
    auto* opt_k = pmf->add_option("--k", pmf_args.k,
                                  "comma-separated non-negative counts, one per component")
                      ->delimiter(',');
    auto* opt_sum =
        pmf->add_option("--sum", pmf_args.sum, "total count h >= 0 (marginal law)");
    opt_k->excludes(opt_sum);
    opt_sum->excludes(opt_k);

    MgfArgs mgf_args;
    auto* mgf = app.add_subcommand(
        "mgf",
        "Moment generating function E[e^{<theta, M(t)>}] = E_{nu,1}(t^nu sum_i "
        "lambda_i e^{theta_i}) / E_{nu,1}(t^nu s(lambda)); prints \"inf\" when the "
        "value overflows double.");
    mgf->add_option("--nu", mgf_args.nu, "fractional order nu in (0, 1]")->required();
    mgf->add_option("--lambda", mgf_args.lambda, "comma-separated intensities")
        ->required()
        ->delimiter(',');
    mgf->add_option("--t", mgf_args.t, "time horizon t > 0")->required();
    mgf->add_option("--theta", mgf_args.theta, "comma-separated exponents theta_i")
        ->required()
        ->delimiter(',');

    MomentsArgs moments_args;
    auto* moments = app.add_subcommand(
        "moments",
        "Mean vector E[M(t)] = [E_{nu,nu}/E_{nu,1}](s(lambda) t^nu) (t^nu/nu) lambda "
        "and the Gaussian-limit covariance C = (1/nu)(1/nu - 1) s^{1/nu-2} lambda "
        "lambda^T + (1/nu) s^{1/nu-1} diag(lambda), s = s(lambda).");
    moments->add_option("--nu", moments_args.nu, "fractional order nu in (0, 1]")
        ->required();
    moments->add_option("--lambda", moments_args.lambda, "comma-separated intensities")
        ->required()
        ->delimiter(',');
    moments->add_option("--t", moments_args.t, "time horizon t > 0")->required();

    RateVecArgs rate_ld_args;
    auto* rate_ld_cmd = app.add_subcommand(
        "rate-ld",
        "Large-deviation rate of M(t)/t: Lambda*(x) = sum_i x_i theta_i(x) - nu s(x) "
        "+ s(lambda)^{1/nu} with theta_i(x) = nu log nu - log lambda_i + log x_i - "
        "(1 - nu) log s(x); +inf off the non-negative orthant.");
    rate_ld_cmd->add_option("--nu", rate_ld_args.nu, "fractional order nu in (0, 1]")
        ->required();
    rate_ld_cmd->add_option("--lambda", rate_ld_args.lambda, "comma-separated intensities")
        ->required()
        ->delimiter(',');
    rate_ld_cmd->add_option("--x", rate_ld_args.x, "comma-separated point, one per component")
        ->required()
        ->delimiter(',');

    RateVecArgs rate_md_args;
    auto* rate_md_cmd = app.add_subcommand(
        "rate-md",
        "Moderate-deviation quadratic rate (1/2) x^T C^{-1} x (+inf off the range of C "
        "when C is singular).");
    rate_md_cmd->add_option("--nu", rate_md_args.nu, "fractional order nu in (0, 1]")
        ->required();
    rate_md_cmd->add_option("--lambda", rate_md_args.lambda, "comma-separated intensities")
        ->required()
        ->delimiter(',');
    rate_md_cmd->add_option("--x", rate_md_args.x, "comma-separated point, one per component")
        ->required()
        ->delimiter(',');

    EstimateArgs estimate_args;
    auto* estimate = app.add_subcommand(
        "estimate",
        "Estimate nu from one observed total: solve (1/x) s(lambda)^{1/x} = s(M(t))/t "
        "for x > 0 (requires s(lambda) >= 1); an observation of 0 yields \"inf\".");
    estimate
        ->add_flag("--nu-unknown", estimate_args.nu_unknown,
                   "acknowledge that nu is treated as unknown and estimated")
        ->required();
    estimate->add_option("--lambda", estimate_args.lambda, "comma-separated intensities")
        ->required()
        ->delimiter(',');
    estimate->add_option("--t", estimate_args.t, "time horizon t > 0")->required();
    estimate->add_option("--sum", estimate_args.sum, "observed total count s(M(t)) >= 0")
        ->required();

    RateJArgs rate_j_args;
    auto* rate_j_cmd = app.add_subcommand(
        "rate-j",
        "Estimator rate J_{nu0}(v) = D((nu0/v) s(lambda)^{1/v}; s(lambda)^{1/nu0}) with "
        "D(l1; l2) = l1 log(l1/l2) - l1 + l2; governs threshold-test error exponents.");
    rate_j_cmd->add_option("--nu0", rate_j_args.nu0, "true fractional order nu0 in (0, 1]")
        ->required();
    rate_j_cmd->add_option("--lambda", rate_j_args.lambda, "comma-separated intensities")
        ->required()
        ->delimiter(',');
    rate_j_cmd
        ->add_option("--nu-hat", rate_j_args.nu_hat,
                     "estimate v >= 0, or the string 'inf'")
        ->required();

    SampleArgs sample_args;
    auto* sample = app.add_subcommand(
        "sample",
        "Draw n observations of M(t) (or totals with --sum-only) by inverse-CDF "
        "sampling of the certified-truncated total pmf plus multinomial splitting "
        "with probabilities lambda_i / s(lambda); deterministic for a fixed seed.");
    sample->add_option("--nu", sample_args.nu, "fractional order nu in (0, 1]")->required();
    sample->add_option("--lambda", sample_args.lambda, "comma-separated intensities")
        ->required()
        ->delimiter(',');
    sample->add_option("--t", sample_args.t, "time horizon t > 0")->required();
    sample->add_option("--n", sample_args.n, "number of draws (default 10)");
    sample->add_option("--seed", sample_args.seed,
                       "64-bit seed (default: FRACPOISSON_SEED env var, else 42)");
    sample->add_flag("--sum-only", sample_args.sum_only, "draw totals s(M(t)) only");
    sample->add_option("--format", sample_args.format, "output format: csv (default) or json");
    sample->add_option("--out", sample_args.out_path, "output path (default stdout)");

    ExperimentArgs experiment_args;
    auto* experiment = app.add_subcommand(
        "experiment",
        "Run a Monte Carlo rate experiment from a JSON config (schema in the README) "
        "and write <prefix>.csv and <prefix>.json; byte-identical for identical "
        "config + seed.");
    experiment->add_option("--config", experiment_args.config_path, "config JSON path")
        ->required();
    experiment->add_option("--out-prefix", experiment_args.out_prefix,
                           "report path prefix (default: config path with .json "
                           "replaced by .report)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        std::cerr << app.help() << std::flush;
        return 2;
    }

    try {
        if (ml->parsed()) return run_ml(ml_args);
        if (pmf->parsed()) {
            pmf_args.has_sum = opt_sum->count() > 0;
            fracpoisson::detail::require_config(
                pmf_args.has_sum || opt_k->count() > 0,
                "pmf: exactly one of --k or --sum is required");
            return run_pmf(pmf_args);
        }
        if (mgf->parsed()) return run_mgf(mgf_args);
        if (moments->parsed()) return run_moments(moments_args);
        if (rate_ld_cmd->parsed()) return run_rate_ld(rate_ld_args);
        if (rate_md_cmd->parsed()) return run_rate_md(rate_md_args);
        if (estimate->parsed()) return run_estimate(estimate_args);
        if (rate_j_cmd->parsed()) return run_rate_j(rate_j_args);
        if (sample->parsed()) {
            sample_args.seed_given = sample->count("--seed") > 0;
            return run_sample(sample_args);
        }
        if (experiment->parsed()) return run_experiment_cmd(experiment_args);
        std::cerr << app.help() << std::flush;
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
