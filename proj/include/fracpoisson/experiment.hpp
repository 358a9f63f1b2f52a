#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fracpoisson/common.hpp"
#include "fracpoisson/estimation.hpp"
#include "fracpoisson/process.hpp"
#include "fracpoisson/rates.hpp"
#include "fracpoisson/sampling.hpp"

namespace fracpoisson {

// Scaling-sequence rule a_t for moderate-deviation experiments. `one_over_t`
// recovers the plain large-deviation speed, `one` is the CLT diagnostic
// regime, and `t_pow` is a_t = t^{-exponent} with exponent in (0, 1) so that
// a_t -> 0 while t * a_t -> infinity.
enum class ATRule { one_over_t, one, t_pow };

struct ATSpec {
    ATRule rule = ATRule::one_over_t;
    double exponent = 0.5;  // consulted only when rule == t_pow
};

inline double a_t_value(const ATSpec& spec, double t) {
    switch (spec.rule) {
        case ATRule::one_over_t: return 1.0 / t;
        case ATRule::one: return 1.0;
        case ATRule::t_pow: return std::pow(t, -spec.exponent);
    }
    throw std::logic_error("a_t_value: unreachable");
}

// Half-space event {x : <u, x> >= c} on the scaled statistic.
struct HalfSpaceEvent {
    std::vector<double> u;
    double c = 0.0;
};

// Estimator threshold event {V >= k} (upper) or {V <= k} (lower) on the
// plug-in estimate V of nu.
struct EstimatorEvent {
    double k = 0.0;
    TestDirection direction = TestDirection::upper;
};

using EventSpec = std::variant<HalfSpaceEvent, EstimatorEvent>;

struct ExperimentConfig {
    ModelParams params;
    std::vector<double> t_grid;  // strictly increasing, all > 0
    std::int64_t n_per_t = 0;    // >= 100
    EventSpec event;
    std::uint64_t seed = 0;
    ATSpec a_t;

    explicit ExperimentConfig(ModelParams p) : params(std::move(p)) {}
};

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

// 95% Wilson score interval for a binomial proportion; well-behaved at
// hits == 0 and hits == n, which is why it is used instead of the Wald form.
inline WilsonInterval wilson_95(std::int64_t hits, std::int64_t n) {
    detail::require_config(n > 0 && hits >= 0 && hits <= n,
                           "wilson_95: requires 0 <= hits <= n");
    const double z = 1.959963984540054;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nn;
    const double z2 = z * z;
    const double denom = nn + z2;
    const double center = (static_cast<double>(hits) + z2 / 2.0) / denom;
    const double half =
        (z / denom) * std::sqrt(p * (1.0 - p) * nn + z2 / 4.0);
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct ExperimentRow {
    double t = 0.0;
    std::int64_t n = 0;
    std::int64_t hits = 0;
    double p_hat = 0.0;
    WilsonInterval wilson;
    bool censored = false;     // hits == 0: no log statistic is formed
    double scale = 0.0;        // multiplier applied to log p_hat (1/t or a_t)
    double log_rate = 0.0;     // scale * log(p_hat); NaN when censored
    double gap = 0.0;          // |log_rate + analytic_rate|; NaN when censored
    double cov_max_rel_err =
        std::numeric_limits<double>::quiet_NaN();  // normality mode only
};

struct ExperimentReport {
    std::string kind;            // "ld" | "md" | "estimator"
    double analytic_rate = 0.0;  // inf of the applicable rate over the event
    std::vector<ExperimentRow> rows;
    std::string trend_verdict;  // improving | not-improving | indeterminate | censored
    double final_gap = std::numeric_limits<double>::quiet_NaN();
    ExperimentConfig config;

    explicit ExperimentReport(ExperimentConfig cfg) : config(std::move(cfg)) {}
};

namespace detail {

inline void validate_experiment_config(const ExperimentConfig& cfg) {
    require_config(!cfg.t_grid.empty(), "ExperimentConfig: t_grid must be non-empty");
    double prev = 0.0;
    for (double t : cfg.t_grid) {
        require_config(std::isfinite(t) && t > prev,
                       "ExperimentConfig: t_grid must be strictly increasing and > 0");
        prev = t;
    }
    require_config(cfg.n_per_t >= 100, "ExperimentConfig: n_per_t must be >= 100");
    if (cfg.a_t.rule == ATRule::t_pow)
        require_config(cfg.a_t.exponent > 0.0 && cfg.a_t.exponent < 1.0,
                       "ExperimentConfig: t_pow exponent must lie in (0, 1)");
}

inline const HalfSpaceEvent& require_half_space(const ExperimentConfig& cfg) {
    const auto* ev = std::get_if<HalfSpaceEvent>(&cfg.event);
    require_config(ev != nullptr, "ExperimentConfig: event must be a half-space");
    require_config(ev->u.size() == cfg.params.m(),
                   "ExperimentConfig: direction u must have one entry per component");
    bool any = false;
    for (double v : ev->u) {
        require_config(std::isfinite(v), "ExperimentConfig: u must be finite");
        if (v != 0.0) any = true;
    }
    require_config(any, "ExperimentConfig: u must be non-zero");
    require_config(std::isfinite(ev->c), "ExperimentConfig: c must be finite");
    return *ev;
}

inline ExperimentRow make_row(double t, std::int64_t n, std::int64_t hits,
                              double scale, double analytic_rate) {
    ExperimentRow row;
    row.t = t;
    row.n = n;
    row.hits = hits;
    row.p_hat = static_cast<double>(hits) / static_cast<double>(n);
    row.wilson = wilson_95(hits, n);
    row.censored = (hits == 0);
    row.scale = scale;
    if (row.censored) {
        row.log_rate = std::numeric_limits<double>::quiet_NaN();
        row.gap = std::numeric_limits<double>::quiet_NaN();
    } else {
        row.log_rate = scale * std::log(row.p_hat);
        row.gap = std::isinf(analytic_rate) ? kInf
                                            : std::abs(row.log_rate + analytic_rate);
    }
    return row;
}

// Range of the gap statistic |scale * log p + rate| as p sweeps the Wilson
// interval; used so trend verdicts rest on interval endpoints rather than
// point estimates.
inline std::pair<double, double> gap_interval(const ExperimentRow& row,
                                              double analytic_rate) {
    if (std::isinf(analytic_rate)) return {kInf, kInf};
    const double a = row.scale * std::log(row.wilson.lo) + analytic_rate;
    const double b = row.scale * std::log(row.wilson.hi) + analytic_rate;
    const double lo = (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(std::abs(a), std::abs(b));
    return {lo, std::max(std::abs(a), std::abs(b))};
}

inline void finalize_report(ExperimentReport& report) {
    std::vector<const ExperimentRow*> live;
    for (const auto& row : report.rows)
        if (!row.censored) live.push_back(&row);
    if (live.empty()) {
        report.trend_verdict = "censored";
        report.final_gap = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    report.final_gap = live.back()->gap;
    if (live.size() < 2) {
        report.trend_verdict = "indeterminate";
        return;
    }
    const auto first = gap_interval(*live.front(), report.analytic_rate);
    const auto last = gap_interval(*live.back(), report.analytic_rate);
    if (last.second < first.first)
        report.trend_verdict = "improving";
    else if (last.first > first.second)
        report.trend_verdict = "not-improving";
    else
        report.trend_verdict = "indeterminate";
}

}  // namespace detail

// Rare-event experiment for the vector process itself: estimates
// P(M(t)/t in half-space) and compares (1/t) log p_hat with minus the
// large-deviation rate of the event, which is obtained from the closed-form
// rate module (never re-derived here).
inline ExperimentReport run_ld_experiment(const ExperimentConfig& cfg) {
    detail::validate_experiment_config(cfg);
    const auto& ev = detail::require_half_space(cfg);
    detail::require_config(cfg.a_t.rule == ATRule::one_over_t,
                           "run_ld_experiment: the large-deviation speed is 1/t");

    ExperimentReport report(cfg);
    report.kind = "ld";
    report.analytic_rate = ld_halfspace_rate(cfg.params, ev.u, ev.c).value;

    for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
        const double t = cfg.t_grid[ti];
        const VectorSampler sampler(cfg.params, t);
        const std::uint64_t t_key = split_key(cfg.seed, ti);
        std::int64_t hits = 0;
        for (std::int64_t rep = 0; rep < cfg.n_per_t; ++rep) {
            SplitMix64 rng(split_key(t_key, static_cast<std::uint64_t>(rep)));
            const LatticePoint draw = sampler.draw(rng);
            double v = 0.0;
            for (std::size_t i = 0; i < ev.u.size(); ++i)
                v += ev.u[i] * (static_cast<double>(draw.k[i]) / t);
            if (v >= ev.c) ++hits;
        }
        report.rows.push_back(
            detail::make_row(t, cfg.n_per_t, hits, 1.0 / t, report.analytic_rate));
    }
    detail::finalize_report(report);
    return report;
}

// Moderate-deviation experiment on the scaled statistic
//   Z_t = sqrt(t a_t) (M(t) - E[M(t)]) / t.
// For a_t = t^{-p}, p in (0,1), reports a_t log p_hat against minus the
// quadratic rate of the event. a_t = 1 is the CLT diagnostic mode: rows are
// still produced, and each row additionally carries the maximum entrywise
// relative error between the empirical covariance of Z_t (centred at the
// model mean) and the limit matrix C; the exponent gap is not expected to
// vanish in that regime.
inline ExperimentReport run_md_experiment(const ExperimentConfig& cfg) {
    detail::validate_experiment_config(cfg);
    const auto& ev = detail::require_half_space(cfg);
    detail::require_config(
        cfg.a_t.rule != ATRule::one_over_t,
        "run_md_experiment: needs a_t -> 0 with t*a_t -> infinity (or a_t = 1)");
    const bool normality = (cfg.a_t.rule == ATRule::one);

    ExperimentReport report(cfg);
    report.kind = "md";
    report.analytic_rate = md_halfspace_rate(cfg.params, ev.u, ev.c);

    const std::size_t m = cfg.params.m();
    const Eigen::MatrixXd limit_cov = covariance_matrix_C(cfg.params).entries;

    for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
        const double t = cfg.t_grid[ti];
        const double a = a_t_value(cfg.a_t, t);
        const double scale_factor = std::sqrt(t * a) / t;
        const std::vector<double> mean = mean_vector(cfg.params, t);
        const VectorSampler sampler(cfg.params, t);
        const std::uint64_t t_key = split_key(cfg.seed, ti);

        std::int64_t hits = 0;
        Eigen::MatrixXd second_moment = Eigen::MatrixXd::Zero(m, m);
        Eigen::VectorXd z(m);
        for (std::int64_t rep = 0; rep < cfg.n_per_t; ++rep) {
            SplitMix64 rng(split_key(t_key, static_cast<std::uint64_t>(rep)));
            const LatticePoint draw = sampler.draw(rng);
            for (std::size_t i = 0; i < m; ++i)
                z(i) = (static_cast<double>(draw.k[i]) - mean[i]) * scale_factor;
            double v = 0.0;
            for (std::size_t i = 0; i < m; ++i) v += ev.u[i] * z(i);
            if (v >= ev.c) ++hits;
            if (normality) second_moment += z * z.transpose();
        }

        ExperimentRow row =
            detail::make_row(t, cfg.n_per_t, hits, a, report.analytic_rate);
        if (normality) {
            second_moment /= static_cast<double>(cfg.n_per_t);
            double worst = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t k = 0; k < m; ++k)
                    worst = std::max(worst,
                                     std::abs(second_moment(j, k) - limit_cov(j, k)) /
                                         std::abs(limit_cov(j, k)));
            row.cov_max_rel_err = worst;
        }
        report.rows.push_back(row);
    }
    detail::finalize_report(report);
    return report;
}

namespace detail {

// The estimate V = g(s(M)/t) is strictly decreasing in the observed total, so
// a threshold event on V is the integer event {total <= S} (upper) or
// {total >= S} (lower). The cutoff is located by scanning totals with the
// estimator itself, which keeps the per-draw test an exact integer compare.
inline std::int64_t estimator_cutoff(const ModelParams& params, double t, double k,
                                     TestDirection direction) {
    constexpr std::int64_t cap = 100000000;
    if (direction == TestDirection::upper) {
        std::int64_t last_inside = -1;
        for (std::int64_t s = 0; s <= cap; ++s) {
            if (estimate_nu(params, t, s).nu_hat >= k) last_inside = s;
            else return last_inside;
        }
    } else {
        for (std::int64_t s = 0; s <= cap; ++s)
            if (estimate_nu(params, t, s).nu_hat <= k) return s;
    }
    throw std::runtime_error("estimator_cutoff: threshold scan exceeded cap");
}

}  // namespace detail

// First-kind-error experiment: simulate totals under nu0 = cfg.params.nu and
// estimate P(V >= k) (or P(V <= k)), comparing (1/t) log p_hat with minus the
// estimator rate J at the threshold. Only totals are drawn because V is a
// function of s(M(t)) alone.
inline ExperimentReport run_estimator_experiment(const ExperimentConfig& cfg) {
    detail::validate_experiment_config(cfg);
    const auto* ev = std::get_if<EstimatorEvent>(&cfg.event);
    detail::require_config(ev != nullptr,
                           "run_estimator_experiment: event must be an estimator threshold");
    detail::require_domain(cfg.params.sum_lambda() >= 1.0,
                           "run_estimator_experiment: estimator requires s(lambda) >= 1");
    detail::require_config(std::isfinite(ev->k) && ev->k > 0.0,
                           "run_estimator_experiment: threshold k must be finite and > 0");
    detail::require_config(cfg.a_t.rule == ATRule::one_over_t,
                           "run_estimator_experiment: the error-exponent speed is 1/t");

    ExperimentReport report(cfg);
    report.kind = "estimator";
    report.analytic_rate = rate_J(cfg.params, cfg.params.nu, ev->k);

    for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
        const double t = cfg.t_grid[ti];
        const std::int64_t cutoff =
            detail::estimator_cutoff(cfg.params, t, ev->k, ev->direction);
        const MarginalSampler sampler(cfg.params, t);
        const std::uint64_t t_key = split_key(cfg.seed, ti);
        std::int64_t hits = 0;
        for (std::int64_t rep = 0; rep < cfg.n_per_t; ++rep) {
            SplitMix64 rng(split_key(t_key, static_cast<std::uint64_t>(rep)));
            const std::int64_t total = sampler.draw(rng);
            const bool hit = (ev->direction == TestDirection::upper)
                                 ? (total <= cutoff)
                                 : (total >= cutoff);
            if (hit) ++hits;
        }
        report.rows.push_back(
            detail::make_row(t, cfg.n_per_t, hits, 1.0 / t, report.analytic_rate));
    }
    detail::finalize_report(report);
    return report;
}

inline ExperimentReport run_experiment(const std::string& kind,
                                       const ExperimentConfig& cfg) {
    if (kind == "ld") return run_ld_experiment(cfg);
    if (kind == "md") return run_md_experiment(cfg);
    if (kind == "estimator") return run_estimator_experiment(cfg);
    throw std::invalid_argument(
        "run_experiment: kind must be one of ld, md, estimator");
}

// ---------------------------------------------------------------------------
// Report emission. CSV is line-oriented with one record per t; JSON is a
// single summary document. Infinities are serialized as the strings "inf" /
// "-inf" (JSON has no native infinity); censored statistics become empty CSV
// cells and JSON nulls. Emission is deterministic for a fixed config + seed.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline nlohmann::json json_number(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    return v;
}

inline nlohmann::json event_to_json(const EventSpec& event) {
    nlohmann::json out;
    if (const auto* hs = std::get_if<HalfSpaceEvent>(&event)) {
        out["type"] = "half_space";
        out["u"] = hs->u;
        out["c"] = hs->c;
    } else {
        const auto& th = std::get<EstimatorEvent>(event);
        out["type"] = "estimator_threshold";
        out["k"] = th.k;
        out["direction"] = th.direction == TestDirection::upper ? "upper" : "lower";
    }
    return out;
}

inline const char* at_rule_name(ATRule rule) {
    switch (rule) {
        case ATRule::one_over_t: return "one_over_t";
        case ATRule::one: return "one";
        case ATRule::t_pow: return "t_pow";
    }
    throw std::logic_error("at_rule_name: unreachable");
}

}  // namespace detail

inline std::string report_to_csv(const ExperimentReport& report) {
    std::string out =
        "t,n,hits,p_hat,wilson_lo,wilson_hi,censored,log_rate,gap,cov_max_rel_err\n";
    for (const auto& row : report.rows) {
        out += detail::format_double(row.t);
        out += ',';
        out += std::to_string(row.n);
        out += ',';
        out += std::to_string(row.hits);
        out += ',';
        out += detail::format_double(row.p_hat);
        out += ',';
        out += detail::format_double(row.wilson.lo);
        out += ',';
        out += detail::format_double(row.wilson.hi);
        out += ',';
        out += row.censored ? "1" : "0";
        out += ',';
        out += detail::format_double(row.log_rate);
        out += ',';
        out += detail::format_double(row.gap);
        out += ',';
        out += detail::format_double(row.cov_max_rel_err);
        out += '\n';
    }
    return out;
}

inline nlohmann::json report_to_json(const ExperimentReport& report) {
    nlohmann::json doc;
    doc["kind"] = report.kind;
    doc["analytic_rate"] = detail::json_number(report.analytic_rate);
    doc["analytic_target"] = detail::json_number(-report.analytic_rate);
    doc["trend_verdict"] = report.trend_verdict;
    doc["final_gap"] = detail::json_number(report.final_gap);

    nlohmann::json cfg;
    cfg["nu"] = report.config.params.nu;
    cfg["lambda"] = report.config.params.lambda;
    cfg["t_grid"] = report.config.t_grid;
    cfg["n_per_t"] = report.config.n_per_t;
    cfg["seed"] = report.config.seed;
    cfg["a_t_rule"] = detail::at_rule_name(report.config.a_t.rule);
    if (report.config.a_t.rule == ATRule::t_pow)
        cfg["a_t_exponent"] = report.config.a_t.exponent;
    cfg["event"] = detail::event_to_json(report.config.event);
    doc["config"] = cfg;

    doc["rows"] = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json r;
        r["t"] = row.t;
        r["n"] = row.n;
        r["hits"] = row.hits;
        r["p_hat"] = row.p_hat;
        r["wilson_lo"] = row.wilson.lo;
        r["wilson_hi"] = row.wilson.hi;
        r["censored"] = row.censored;
        r["log_rate"] = detail::json_number(row.log_rate);
        r["gap"] = detail::json_number(row.gap);
        r["cov_max_rel_err"] = detail::json_number(row.cov_max_rel_err);
        doc["rows"].push_back(r);
    }
    return doc;
}

inline std::string report_to_json_string(const ExperimentReport& report) {
    return report_to_json(report).dump(2) + "\n";
}

// Parsed form of an experiment config file: which runner to invoke plus the
// config itself. See the README for the documented schema.
struct ExperimentSpecFile {
    std::string kind;
    ExperimentConfig config;
};

inline ExperimentSpecFile parse_experiment_json(const nlohmann::json& doc) {
    try {
        const std::string kind = doc.at("experiment").get<std::string>();
        detail::require_config(
            kind == "ld" || kind == "md" || kind == "estimator",
            "experiment config: experiment must be one of ld, md, estimator");

        ExperimentConfig cfg(ModelParams(doc.at("nu").get<double>(),
                                         doc.at("lambda").get<std::vector<double>>()));
        cfg.t_grid = doc.at("t_grid").get<std::vector<double>>();
        cfg.n_per_t = doc.at("n_per_t").get<std::int64_t>();
        cfg.seed = doc.at("seed").get<std::uint64_t>();

        const std::string rule = doc.value("a_t_rule", std::string("one_over_t"));
        if (rule == "one_over_t") {
            cfg.a_t = {ATRule::one_over_t, 0.5};
        } else if (rule == "one") {
            cfg.a_t = {ATRule::one, 0.5};
        } else if (rule == "t_pow") {
            cfg.a_t = {ATRule::t_pow, doc.at("a_t_exponent").get<double>()};
        } else {
            throw std::invalid_argument(
                "experiment config: a_t_rule must be one of one_over_t, one, t_pow");
        }

        const nlohmann::json& ev = doc.at("event");
        const std::string type = ev.at("type").get<std::string>();
        if (type == "half_space") {
            HalfSpaceEvent hs;
            hs.u = ev.at("u").get<std::vector<double>>();
            hs.c = ev.at("c").get<double>();
            cfg.event = hs;
        } else if (type == "estimator_threshold") {
            EstimatorEvent th;
            th.k = ev.at("k").get<double>();
            const std::string dir = ev.at("direction").get<std::string>();
            detail::require_config(dir == "upper" || dir == "lower",
                                   "experiment config: direction must be upper or lower");
            th.direction = dir == "upper" ? TestDirection::upper : TestDirection::lower;
            cfg.event = th;
        } else {
            throw std::invalid_argument(
                "experiment config: event.type must be half_space or estimator_threshold");
        }
        return {kind, std::move(cfg)};
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("experiment config: ") + e.what());
    }
}

}  // namespace fracpoisson
