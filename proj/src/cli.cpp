#include "tailduality/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tailduality/calibration.hpp"
#include "tailduality/dual_core.hpp"
#include "tailduality/loss_model.hpp"
#include "tailduality/oce.hpp"
#include "tailduality/uncertainty.hpp"

namespace tailduality {

namespace {

// Flag combinations CLI11 cannot express on its own (conditional
// requirements); usage errors exit with status 2, before any computation.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v, int precision) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

std::string fmt_interval(double lo, double hi, int precision) {
    return "[" + fmt(lo, precision) + "," + fmt(hi, precision) + "]";
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return parts;
}

double parse_number(const std::string& token, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used == token.size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("bad " + what + ": '" + token + "'");
}

struct SweepSpec {
    std::string var;  // t, delta or p
    double lo = 0.0;
    double hi = 0.0;
    int points = 201;
};

SweepSpec parse_sweep(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() != 3 && parts.size() != 4)
        throw UsageError("--sweep wants var:lo:hi[:points], got '" + text +
                         "'");
    SweepSpec s;
    s.var = parts[0];
    if (s.var != "t" && s.var != "delta" && s.var != "p")
        throw UsageError("--sweep variable must be t, delta or p");
    s.lo = parse_number(parts[1], "sweep lower bound");
    s.hi = parse_number(parts[2], "sweep upper bound");
    if (parts.size() == 4) {
        const double n = parse_number(parts[3], "sweep point count");
        if (!(n >= 2) || n != std::floor(n) || n > 1e7)
            throw UsageError("sweep point count must be an integer >= 2");
        s.points = static_cast<int>(n);
    }
    if (!(s.lo <= s.hi)) throw UsageError("sweep range needs lo <= hi");
    return s;
}

void write_sweep_header(std::ostream& out, const std::string& format,
                        const std::string& var, int precision,
                        const std::string& value_name = "value") {
    if (format == "csv") {
        out << var << ',' << value_name << '\n';
    } else {
        const int w = precision + 8;
        out << std::setw(w) << var << std::setw(w) << value_name << '\n';
    }
}

void write_sweep_row(std::ostream& out, const std::string& format, double x,
                     double value, int precision) {
    if (format == "csv") {
        out << fmt(x, precision) << ',' << fmt(value, precision) << '\n';
    } else {
        const int w = precision + 8;
        out << std::setw(w) << fmt(x, precision) << std::setw(w)
            << fmt(value, precision) << '\n';
    }
}

std::string file_stem(const std::string& path) {
    const std::string stem = std::filesystem::path(path).stem().string();
    return stem.empty() ? path : stem;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
    CLI::App app{
        "Tail-risk duality toolkit: expected shortfall and optimized"
        " certainty equivalents with their reverse optimization formulas,"
        " worst-case values over moment and Wasserstein balls, and"
        " Wasserstein-calibrated stop-loss ratio reports."};
    app.require_subcommand(1);

    int precision = 6;
    auto* precision_opt =
        app.add_option("--precision", precision,
                       "significant digits for printed numbers (default 6;"
                       " env TAILDUALITY_PRECISION)")
            ->check(CLI::Range(1, 17));
    std::string format = "table";
    app.add_option("--format", format, "table or csv for tabular commands")
        ->check(CLI::IsMember({"table", "csv"}));

    auto* es_cmd =
        app.add_subcommand("es", "expected shortfall at a probability level");
    es_cmd->fallthrough();
    std::string es_model;
    double es_level = 0.0;
    std::string es_via = "direct";
    es_cmd->add_option("--model", es_model,
                       "loss model, e.g. pareto:theta=2 or empirical:file=F")
        ->required();
    es_cmd->add_option("--alpha", es_level, "probability level")->required();
    es_cmd->add_option("--via", es_via,
                       "direct (tail integral) or ru (minimization route)")
        ->check(CLI::IsMember({"direct", "ru"}));

    auto* me_cmd = app.add_subcommand("mean-excess",
                                      "stop-loss value E[(X-t)+] at a"
                                      " deductible");
    me_cmd->fallthrough();
    std::string me_model;
    double me_t = 0.0;
    std::string me_via = "direct";
    me_cmd->add_option("--model", me_model, "loss model")->required();
    me_cmd->add_option("--t", me_t, "deductible threshold")->required();
    me_cmd->add_option("--via", me_via,
                       "direct (expectation) or reverse (maximization route)")
        ->check(CLI::IsMember({"direct", "reverse"}));

    auto* wc_cmd = app.add_subcommand(
        "worst-case",
        "worst-case ES (--alpha) or mean excess (--t) over an uncertainty"
        " ball, single value or sweep");
    wc_cmd->fallthrough();
    std::string wc_kind;
    wc_cmd->add_option("--kind", wc_kind, "moment or wasserstein")
        ->required()
        ->check(CLI::IsMember({"moment", "wasserstein"}));
    double wc_p = 0.0;
    auto* wc_p_opt = wc_cmd->add_option("--p", wc_p, "ball order, p >= 1");
    double wc_m = 0.0;
    auto* wc_m_opt = wc_cmd->add_option("--m", wc_m, "moment ball mean");
    double wc_v = 0.0;
    auto* wc_v_opt =
        wc_cmd->add_option("--v", wc_v, "moment ball dispersion bound");
    double wc_delta = 0.0;
    auto* wc_delta_opt =
        wc_cmd->add_option("--delta", wc_delta, "Wasserstein radius");
    std::string wc_benchmark;
    auto* wc_benchmark_opt = wc_cmd->add_option(
        "--benchmark", wc_benchmark, "center of the Wasserstein ball");
    double wc_t = 0.0;
    auto* wc_t_opt =
        wc_cmd->add_option("--t", wc_t, "mean excess threshold target");
    double wc_alpha = 0.0;
    auto* wc_alpha_opt =
        wc_cmd->add_option("--alpha", wc_alpha, "ES level target");
    std::string wc_sweep;
    auto* wc_sweep_opt = wc_cmd->add_option(
        "--sweep", wc_sweep, "var:lo:hi[:points] with var in {t, delta, p};"
                             " default 201 points");

    auto* oce_cmd = app.add_subcommand(
        "oce", "optimized certainty equivalent (--beta) or its reverse"
               " formula (--reverse --t)");
    oce_cmd->fallthrough();
    std::string oce_model;
    std::string oce_kernel;
    oce_cmd->add_option("--model", oce_model, "loss model")->required();
    oce_cmd
        ->add_option("--kernel", oce_kernel,
                     "positive-part | scaled-positive-part:alpha=A | entropic")
        ->required();
    double oce_beta = 0.0;
    auto* oce_beta_opt =
        oce_cmd->add_option("--beta", oce_beta, "risk aversion in (0, v_bar]");
    bool oce_reverse = false;
    oce_cmd->add_flag("--reverse", oce_reverse,
                      "compute E[v(X-t)] as a sup over beta");
    double oce_t = 0.0;
    auto* oce_t_opt =
        oce_cmd->add_option("--t", oce_t, "threshold for --reverse");
    std::string oce_truncate;
    auto* oce_trunc_opt = oce_cmd->add_option(
        "--truncate", oce_truncate,
        "lo:hi quantile levels clamping an unbounded model");

    auto* conj_cmd = app.add_subcommand(
        "conjugate", "convex conjugate of the scaled ES profile f1 or the"
                     " scaled left-ES profile f2");
    conj_cmd->fallthrough();
    std::string conj_model, conj_which;
    double conj_t = 0.0;
    conj_cmd->add_option("--model", conj_model, "loss model")->required();
    conj_cmd->add_option("--which", conj_which, "f1 or f2")
        ->required()
        ->check(CLI::IsMember({"f1", "f2"}));
    conj_cmd->add_option("--t", conj_t, "conjugate argument")->required();

    auto* fit_cmd =
        app.add_subcommand("fit", "maximum likelihood fit of a loss sample");
    fit_cmd->fallthrough();
    std::string fit_file, fit_family;
    fit_cmd->add_option("--file", fit_file, "loss file, one value per line")
        ->required();
    fit_cmd->add_option("--family", fit_family, "lognormal, weibull or gamma")
        ->required()
        ->check(CLI::IsMember({"lognormal", "weibull", "gamma"}));
    bool fit_qq = false;
    fit_cmd->add_flag("--qq", fit_qq,
                      "also emit paired (model quantile, sample value) rows"
                      " for a Q-Q plot");

    auto* w_cmd = app.add_subcommand(
        "wasserstein", "p-Wasserstein distance between two loss models");
    w_cmd->fallthrough();
    std::string w_a, w_b;
    double w_p = 0.0;
    w_cmd->add_option("--a", w_a, "first model")->required();
    w_cmd->add_option("--b", w_b, "second model")->required();
    w_cmd->add_option("--p", w_p, "order, p >= 1")->required();

    auto* an_cmd = app.add_subcommand(
        "analyze", "fit benchmark families, calibrate the Wasserstein radius"
                   " delta0 and tabulate worst-case stop-loss ratios");
    an_cmd->fallthrough();
    std::string an_file;
    an_cmd->add_option("--file", an_file, "loss file")->required();
    double an_p = 2.0;
    an_cmd->add_option("--p", an_p, "Wasserstein order (default 2)");
    std::vector<std::string> an_families;
    an_cmd
        ->add_option("--families", an_families,
                     "comma-separated subset of lognormal,weibull,gamma")
        ->delimiter(',');
    std::vector<double> an_delta_grid;
    an_cmd
        ->add_option("--delta-grid", an_delta_grid,
                     "comma-separated multiples of delta0 (default"
                     " 1.0,1.2,1.4,1.6,1.8,2.0)")
        ->delimiter(',');
    std::vector<double> an_t_grid;
    an_cmd
        ->add_option("--t-grid", an_t_grid,
                     "comma-separated thresholds (default: 21 points spanning"
                     " the data quartiles)")
        ->delimiter(',');

    auto run_es = [&]() {
        const LossModel model = parse_loss_model(es_model);
        if (es_via == "ru") {
            const auto res = es_via_ru(model, es_level);
            out << "value=" << fmt(res.value, precision) << " minimizer="
                << fmt_interval(res.optimizer.lo, res.optimizer.hi, precision)
                << '\n';
        } else {
            // Compute before streaming so a domain error leaves stdout clean.
            const double value = es(model, es_level);
            out << "value=" << fmt(value, precision) << '\n';
        }
    };

    auto run_mean_excess = [&]() {
        const LossModel model = parse_loss_model(me_model);
        if (me_via == "reverse") {
            const auto res = mean_excess_via_reverse(model, me_t);
            out << "value=" << fmt(res.value, precision) << " maximizer="
                << fmt_interval(res.optimizer.lo, res.optimizer.hi, precision)
                << '\n';
        } else {
            const double value = model.upper_partial_expectation(me_t);
            out << "value=" << fmt(value, precision) << '\n';
        }
    };

    auto run_worst_case = [&]() {
        const bool moment = wc_kind == "moment";
        std::optional<SweepSpec> sweep;
        if (wc_sweep_opt->count()) sweep = parse_sweep(wc_sweep);
        const bool sweep_t = sweep && sweep->var == "t";
        const bool sweep_delta = sweep && sweep->var == "delta";
        const bool sweep_p = sweep && sweep->var == "p";

        if (moment) {
            if (wc_delta_opt->count() || wc_benchmark_opt->count())
                throw UsageError(
                    "--delta/--benchmark apply to --kind wasserstein");
            if (!wc_m_opt->count() || !wc_v_opt->count())
                throw UsageError("--kind moment needs --m and --v");
            if (sweep_delta)
                throw UsageError("a delta sweep needs --kind wasserstein");
        } else {
            if (wc_m_opt->count() || wc_v_opt->count())
                throw UsageError("--m/--v apply to --kind moment");
            if (!wc_benchmark_opt->count())
                throw UsageError("--kind wasserstein needs --benchmark");
            if (sweep_delta && wc_delta_opt->count())
                throw UsageError("--delta conflicts with a delta sweep");
            if (!sweep_delta && !wc_delta_opt->count())
                throw UsageError("--kind wasserstein needs --delta");
        }
        if (sweep_p && wc_p_opt->count())
            throw UsageError("--p conflicts with a p sweep");
        if (!sweep_p && !wc_p_opt->count())
            throw UsageError("need --p (ball order)");
        const bool has_t = wc_t_opt->count() > 0;
        const bool has_alpha = wc_alpha_opt->count() > 0;
        if (sweep_t) {
            if (has_t || has_alpha)
                throw UsageError("a t sweep fixes the target; drop --t and"
                                 " --alpha");
        } else if (has_t == has_alpha) {
            throw UsageError("need exactly one of --t or --alpha");
        }

        std::optional<LossModel> benchmark;
        if (!moment) benchmark = parse_loss_model(wc_benchmark);
        auto make_spec = [&](double p, double delta) -> UncertaintySpec {
            if (moment) return MomentBall{p, wc_m, wc_v};
            return WassersteinBall{p, delta, *benchmark};
        };

        if (!sweep) {
            const UncertaintySpec spec = make_spec(wc_p, wc_delta);
            if (has_alpha) {
                const double value = worst_es(spec, wc_alpha);
                out << "value=" << fmt(value, precision) << '\n';
            } else {
                const auto res = worst_mean_excess(spec, wc_t);
                out << "value=" << fmt(res.value, precision) << " maximizer="
                    << fmt_interval(res.optimizer.lo, res.optimizer.hi,
                                    precision)
                    << '\n';
            }
            return;
        }
        write_sweep_header(out, format, sweep->var, precision);
        for (int i = 0; i < sweep->points; ++i) {
            const double x =
                sweep->lo +
                (sweep->hi - sweep->lo) * i / (sweep->points - 1);
            const UncertaintySpec spec = make_spec(sweep_p ? x : wc_p,
                                                   sweep_delta ? x : wc_delta);
            const double value =
                (sweep_t || has_t)
                    ? worst_mean_excess(spec, sweep_t ? x : wc_t).value
                    : worst_es(spec, wc_alpha);
            write_sweep_row(out, format, x, value, precision);
        }
    };

    auto run_oce = [&]() {
        if (oce_reverse == (oce_beta_opt->count() > 0))
            throw UsageError(
                "need exactly one of --beta (forward) or --reverse");
        if (oce_reverse && !oce_t_opt->count())
            throw UsageError("--reverse needs --t");
        if (!oce_reverse && oce_t_opt->count())
            throw UsageError("--t applies only with --reverse");
        LossModel model = parse_loss_model(oce_model);
        if (oce_trunc_opt->count()) {
            const auto parts = split(oce_truncate, ':');
            if (parts.size() != 2)
                throw UsageError("--truncate wants lo:hi quantile levels");
            model = model.truncate_at_levels(
                parse_number(parts[0], "truncation level"),
                parse_number(parts[1], "truncation level"));
        }
        const OceKernel kernel = parse_kernel(oce_kernel);
        if (oce_reverse) {
            const auto res = expected_kernel_via_reverse(model, kernel, oce_t);
            out << "value=" << fmt(res.value, precision)
                << " beta=" << fmt(res.optimizer, precision) << '\n';
        } else {
            const auto res = oce(model, kernel, oce_beta);
            out << "value=" << fmt(res.value, precision)
                << " minimizer=" << fmt(res.optimizer, precision) << '\n';
        }
    };

    auto run_conjugate = [&]() {
        const LossModel model = parse_loss_model(conj_model);
        const auto res = conj_which == "f1" ? conjugate_f1(model, conj_t)
                                            : conjugate_f2(model, conj_t);
        out << "value=" << fmt(res.value, precision) << " maximizer="
            << fmt_interval(res.optimizer.lo, res.optimizer.hi, precision)
            << '\n';
    };

    auto run_fit = [&]() {
        const EmpiricalSample sample = load_losses(fit_file);
        const FitResult res = fit_mle(sample, parse_fit_family(fit_family));
        const auto names = res.param_names();
        if (format == "csv") {
            out << "family," << names.first << ',' << names.second
                << ",log_likelihood,converged,iterations\n"
                << fit_family_name(res.family) << ','
                << fmt(res.param1, precision) << ','
                << fmt(res.param2, precision) << ','
                << fmt(res.log_likelihood, precision) << ','
                << (res.converged ? "true" : "false") << ',' << res.iterations
                << '\n';
        } else {
            out << "family: " << fit_family_name(res.family) << '\n'
                << names.first << ": " << fmt(res.param1, precision) << '\n'
                << names.second << ": " << fmt(res.param2, precision) << '\n'
                << "log_likelihood: " << fmt(res.log_likelihood, precision)
                << '\n'
                << "converged: " << (res.converged ? "true" : "false") << '\n'
                << "iterations: " << res.iterations << '\n';
        }
        if (fit_qq) {
            const auto points = qq_points(sample, res.model());
            write_sweep_header(out, format, "model_quantile", precision,
                               "sample_value");
            for (const auto& [q, x] : points)
                write_sweep_row(out, format, q, x, precision);
        }
    };

    auto run_wasserstein = [&]() {
        const auto res = wasserstein_distance_full(parse_loss_model(w_a),
                                                   parse_loss_model(w_b), w_p);
        out << "value=" << fmt(res.value, precision);
        if (!res.note.empty()) out << " note=" << res.note;
        out << '\n';
    };

    auto run_analyze = [&]() {
        AnalyzeOptions options;
        options.p = an_p;
        if (!an_families.empty()) {
            options.families.clear();
            for (const std::string& name : an_families) {
                try {
                    options.families.push_back(parse_fit_family(name));
                } catch (const std::invalid_argument& e) {
                    throw UsageError(e.what());
                }
            }
        }
        if (!an_delta_grid.empty()) options.delta_multipliers = an_delta_grid;
        options.t_grid = an_t_grid;
        options.dataset = file_stem(an_file);
        const EmpiricalSample sample = load_losses(an_file);
        const auto reports = analyze(sample, options);
        if (format == "csv")
            write_reports_csv(out, reports, precision);
        else
            write_reports_table(out, reports, precision);
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n'
            << "run with --help for usage\n";
        return 2;
    }

    if (!precision_opt->count()) {
        if (const char* env = std::getenv("TAILDUALITY_PRECISION")) {
            try {
                const double v = parse_number(env, "TAILDUALITY_PRECISION");
                if (v < 1 || v > 17 || v != std::floor(v))
                    throw UsageError(
                        "TAILDUALITY_PRECISION must be an integer in"
                        " [1, 17]");
                precision = static_cast<int>(v);
            } catch (const UsageError& e) {
                err << "usage error: " << e.what() << '\n';
                return 2;
            }
        }
    }

    try {
        if (*es_cmd)
            run_es();
        else if (*me_cmd)
            run_mean_excess();
        else if (*wc_cmd)
            run_worst_case();
        else if (*oce_cmd)
            run_oce();
        else if (*conj_cmd)
            run_conjugate();
        else if (*fit_cmd)
            run_fit();
        else if (*w_cmd)
            run_wasserstein();
        else if (*an_cmd)
            run_analyze();
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace tailduality
