// spaceport: estimate, simulate and backtest from the command line.
//
// Every subcommand accepts --config <file|bundled name> holding flat
// key = value lines named after the long flags. Precedence is
// flags > SPACEPORT_* environment variables > config file > defaults.

#include "spaceport/backtest.hpp"
#include "spaceport/manifest.hpp"
#include "spaceport/returns_csv.hpp"
#include "spaceport/serialize.hpp"
#include "spaceport/simulation.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using namespace spaceport;

namespace
{
    std::string format_double(double v)
    {
        char buf[64];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, end);
    }

    std::string env_name(const std::string &flag)
    {
        std::string out = "SPACEPORT_";
        for (char c : flag)
            out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return out;
    }

    std::string bundled_config_dir()
    {
        if (const char *dir = std::getenv("SPACEPORT_CONFIG_DIR"))
            return dir;
        return SPACEPORT_CONFIG_DIR;
    }

    /// A --config value may be a path or the stem of a bundled file in the config directory.
    std::string resolve_config(const std::string &value)
    {
        if (fs::is_regular_file(value))
            return value;
        const fs::path bundled = fs::path(bundled_config_dir()) / (value + ".conf");
        if (fs::is_regular_file(bundled))
            return bundled.string();
        throw CLI::ValidationError("--config", "no config file or bundled config named '" + value + "'");
    }

    void add_config(CLI::App &app)
    {
        app.add_option("--config", "Flat key = value config file, or a bundled config name")
            ->transform([](std::string value) { return resolve_config(value); });
    }

    std::vector<std::string> split_list(const std::string &text)
    {
        std::vector<std::string> out;
        std::string item;
        for (char c : text + ',')
        {
            if (c == ',' || std::isspace(static_cast<unsigned char>(c)))
            {
                if (!item.empty())
                    out.push_back(item);
                item.clear();
            }
            else
                item += c;
        }
        return out;
    }

    /// Fill options not given on the command line from SPACEPORT_<FLAG>, then from the config file.
    void apply_fallbacks(CLI::App &app)
    {
        std::map<std::string, std::vector<std::string>> file_values;
        const CLI::Option *config = app.get_option_no_throw("--config");
        if (config != nullptr && config->count() > 0)
        {
            for (const auto &item : CLI::ConfigTOML().from_file(config->as<std::string>()))
            {
                if (!item.parents.empty() || item.name == "++" || item.name == "--")
                    continue;
                if (app.get_option_no_throw("--" + item.name) == nullptr || item.name == "config")
                    throw CLI::ConfigError::Extras(item.name);
                file_values[item.name] = item.inputs;
            }
        }
        for (CLI::Option *opt : app.get_options())
        {
            const auto &names = opt->get_lnames();
            if (names.empty() || names.front() == "help" || names.front() == "config" || opt->count() > 0)
                continue;
            std::vector<std::string> values;
            if (const char *env = std::getenv(env_name(names.front()).c_str()); env && *env)
                values = opt->get_items_expected_max() > 1 ? split_list(env) : std::vector<std::string>{env};
            else if (auto it = file_values.find(names.front()); it != file_values.end())
                values = it->second;
            else
                continue;
            opt->add_result(values);
            opt->run_callback();
        }
    }

    /// Every option of a subcommand with its effective value, for the manifest.
    std::map<std::string, std::string> resolved_options(const CLI::App &app)
    {
        std::map<std::string, std::string> out;
        for (const CLI::Option *opt : app.get_options())
        {
            const auto &names = opt->get_lnames();
            if (names.empty() || names.front() == "help")
                continue;
            std::string value;
            if (opt->count() > 0)
            {
                for (const auto &r : opt->results())
                    value += (value.empty() ? "" : " ") + r;
            }
            else
                value = opt->get_default_str();
            out[names.front()] = value;
        }
        return out;
    }

    void ensure_dir(const std::string &dir)
    {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
            throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
    }

    std::ofstream open_out(const fs::path &path)
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot write '" + path.string() + "'");
        return out;
    }

    ReturnsMatrix load_returns(const std::string &path, const std::string &risk_free)
    {
        ReturnsMatrix x = read_returns_csv(path);
        if (!risk_free.empty())
            x = subtract_risk_free(x, read_risk_free_csv(risk_free));
        return x;
    }

    int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

    struct SpaceFlags
    {
        std::string lambda = "auto";
        int outer_iterations = 3;
        double tolerance = 1e-6;
        int grid_size = 30;

        void add(CLI::App &app)
        {
            app.add_option("--lambda", lambda, "Penalty for the joint shrinkage fit, or 'auto' for BIC selection")
                ->capture_default_str();
            app.add_option("--outer-iterations", outer_iterations, "Alternating rho/omega steps")
                ->check(CLI::PositiveNumber)
                ->capture_default_str();
            app.add_option("--tolerance", tolerance, "Coordinate descent tolerance")
                ->check(CLI::PositiveNumber)
                ->capture_default_str();
            app.add_option("--grid-size", grid_size, "Penalty grid size for automatic selection")
                ->check(CLI::PositiveNumber)
                ->capture_default_str();
        }

        SpaceConfig space() const
        {
            SpaceConfig cfg;
            if (lambda != "auto")
            {
                double v = 0.0;
                auto [ptr, ec] = std::from_chars(lambda.data(), lambda.data() + lambda.size(), v);
                if (ec != std::errc() || ptr != lambda.data() + lambda.size())
                    throw CLI::ValidationError("--lambda", "expected 'auto' or a number, got '" + lambda + "'");
                cfg.lambda = v;
            }
            cfg.outer_iterations = outer_iterations;
            cfg.coord_tolerance = tolerance;
            cfg.lambda_grid_size = grid_size;
            cfg.validate();
            return cfg;
        }

        NodewiseConfig nodewise() const
        {
            NodewiseConfig cfg;
            cfg.coord_tolerance = tolerance;
            cfg.grid_size = std::max(2, grid_size);
            cfg.validate();
            return cfg;
        }
    };

    const std::vector<std::string> estimator_names = {"space-unweighted", "space-weighted", "nodewise",
                                                      "ledoit-wolf", "exact"};

    // estimate ------------------------------------------------------------

    struct EstimateArgs
    {
        std::string input;
        std::string estimator = "space-unweighted";
        std::string risk_free;
        std::string output_dir = ".";
        std::uint64_t seed = 0;
        int jobs = 1;
        SpaceFlags fit;
    };

    void run_estimate(const EstimateArgs &a, const CLI::App &app, RunManifest &manifest)
    {
        const EstimatorTag tag = estimator_from_string(a.estimator);
        if (tag == EstimatorTag::exact || tag == EstimatorTag::poet)
            throw CLI::ValidationError("--estimator", "'" + a.estimator + "' cannot be fitted from data");
        manifest.add_input(a.input);
        if (!a.risk_free.empty())
            manifest.add_input(a.risk_free);
        const ReturnsMatrix x = load_returns(a.input, a.risk_free);
        ensure_dir(a.output_dir);

        manifest.config = resolved_options(app);
        if (tag == EstimatorTag::space_unweighted || tag == EstimatorTag::space_weighted)
        {
            SpaceConfig cfg = a.fit.space();
            cfg.weight_mode = tag == EstimatorTag::space_weighted ? WeightMode::precision : WeightMode::uniform;
            const SpaceFit fit = fit_space(x, cfg);
            nlohmann::json j = space_fit_json(fit, x.asset_labels());
            j["estimator"] = a.estimator;
            open_out(fs::path(a.output_dir) / "fit.json") << j.dump(2) << '\n';
            manifest.config["lambda_used"] = format_double(fit.lambda_used);
        }
        else
        {
            const PrecisionMatrix omega =
                tag == EstimatorTag::nodewise ? fit_nodewise(x, a.fit.nodewise()) : fit_ledoit_wolf(x).precision;
            auto out = open_out(fs::path(a.output_dir) / "precision.csv");
            write_precision_csv(out, omega, x.asset_labels());
        }
    }

    // simulate ------------------------------------------------------------

    struct SimulateArgs
    {
        std::string dgp = "toeplitz";
        std::vector<std::string> portfolios{"gmv"};
        std::vector<std::string> estimators = estimator_names;
        std::vector<std::string> sizes{"100x50"};
        int replications = 100;
        std::uint64_t seed = 1;
        std::string markowitz_mu = "sample";
        std::optional<double> mean_variance;
        double toeplitz_base = 0.15;
        std::string output_dir = ".";
        int jobs = default_jobs();
        SpaceFlags fit;
    };

    std::pair<int, int> parse_size(const std::string &s)
    {
        const auto x = s.find('x');
        int n = 0, p = 0;
        if (x != std::string::npos)
        {
            auto r1 = std::from_chars(s.data(), s.data() + x, n);
            auto r2 = std::from_chars(s.data() + x + 1, s.data() + s.size(), p);
            if (r1.ec == std::errc() && r1.ptr == s.data() + x && r2.ec == std::errc() &&
                r2.ptr == s.data() + s.size() && n > 0 && p > 0)
                return {n, p};
        }
        throw CLI::ValidationError("--sizes", "expected NxP, got '" + s + "'");
    }

    void run_simulate(const SimulateArgs &a, const CLI::App &app, RunManifest &manifest)
    {
        StudyConfig cfg;
        cfg.replications = a.replications;
        cfg.base_seed = a.seed;
        cfg.jobs = a.jobs;
        cfg.space = a.fit.space();
        cfg.nodewise = a.fit.nodewise();
        if (a.markowitz_mu == "true")
            cfg.markowitz_mu = MarkowitzMu::truth;
        else if (a.markowitz_mu == "sample")
            cfg.markowitz_mu = MarkowitzMu::sample;
        else
            throw CLI::ValidationError("--markowitz-mu", "expected 'sample' or 'true'");
        for (const auto &p : a.portfolios)
            cfg.portfolios.push_back(portfolio_from_string(p));
        for (const auto &e : a.estimators)
            cfg.estimators.push_back(estimator_from_string(e));
        const bool markowitz =
            std::find(cfg.portfolios.begin(), cfg.portfolios.end(), PortfolioKind::markowitz) != cfg.portfolios.end();
        const DgpKind kind = dgp_from_string(a.dgp);
        for (const auto &s : a.sizes)
        {
            DgpSpec spec;
            spec.kind = kind;
            std::tie(spec.n, spec.p) = parse_size(s);
            spec.toeplitz_base = a.toeplitz_base;
            spec.mean_mode = markowitz ? MeanMode::gaussian : MeanMode::zero;
            spec.mean_variance = a.mean_variance.value_or(default_markowitz_mean_variance(kind));
            spec.seed = a.seed;
            spec.validate();
            cfg.specs.push_back(spec);
        }
        cfg.validate();
        ensure_dir(a.output_dir);
        manifest.config = resolved_options(app);

        const StudyResult result = run_study(cfg);
        auto csv = open_out(fs::path(a.output_dir) / "study.csv");
        write_study_csv(csv, result);
        open_out(fs::path(a.output_dir) / "study.json") << study_json(result).dump(2) << '\n';
    }

    // backtest ------------------------------------------------------------

    struct BacktestArgs
    {
        std::string input;
        std::vector<std::string> estimators{"space-unweighted", "space-weighted", "nodewise", "ledoit-wolf"};
        std::string portfolio = "gmv";
        std::optional<double> target;
        std::string frequency = "monthly";
        int train_length = 60;
        double cost_bps = default_cost_rate * 1e4;
        int rebalance_every = 1;
        bool charge_initial_trade = false;
        std::string risk_free;
        std::string output_dir = ".";
        std::uint64_t seed = 0;
        int jobs = default_jobs();
        SpaceFlags fit;
    };

    void run_backtest_cmd(const BacktestArgs &a, const CLI::App &app, RunManifest &manifest)
    {
        manifest.add_input(a.input);
        if (!a.risk_free.empty())
            manifest.add_input(a.risk_free);
        const ReturnsMatrix x = load_returns(a.input, a.risk_free);

        BacktestConfig base;
        base.train_length = a.train_length;
        base.portfolio = portfolio_from_string(a.portfolio);
        base.cost = a.cost_bps * 1e-4;
        base.rebalance_every = a.rebalance_every;
        base.charge_initial_trade = a.charge_initial_trade;
        base.jobs = a.jobs;
        base.space = a.fit.space();
        base.nodewise = a.fit.nodewise();
        double target = 0.0;
        if (a.target)
            target = *a.target;
        else if (a.frequency == "monthly")
            target = monthly_target_return;
        else if (a.frequency == "daily")
            target = daily_target_return;
        else
            throw CLI::ValidationError("--frequency", "expected 'monthly' or 'daily'");
        if (base.portfolio == PortfolioKind::markowitz)
            base.target = PortfolioTarget{target};

        ensure_dir(a.output_dir);
        manifest.config = resolved_options(app);
        manifest.config["target"] = format_double(target);
        manifest.config["cost"] = format_double(base.cost);

        std::vector<BacktestReport> reports;
        for (const auto &name : a.estimators)
        {
            BacktestConfig cfg = base;
            cfg.estimator = estimator_from_string(name);
            cfg.validate();
            reports.push_back(run_backtest(x, cfg));
            const std::string stem = name + "_" + a.portfolio;
            open_out(fs::path(a.output_dir) / (stem + ".json")) << backtest_json(reports.back()).dump(2) << '\n';
            auto periods = open_out(fs::path(a.output_dir) / (stem + "_periods.csv"));
            write_period_csv(periods, reports.back());
            for (const auto &r : reports.back().refits)
                if (r.markowitz_fallback)
                    std::cerr << "note: " << name << " window " << r.window_start << ".." << r.window_end
                              << " fell back to GMV: " << r.note << '\n';
        }
        auto summary = open_out(fs::path(a.output_dir) / "summary.csv");
        write_summary_csv(summary, reports);
    }

    template <class Args>
    void add_common(CLI::App &cmd, Args &a)
    {
        cmd.add_option("--seed", a.seed, "Seed for all randomness")->capture_default_str();
        cmd.add_option("--jobs", a.jobs, "Concurrent replications or window fits")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd.add_option("--output-dir", a.output_dir, "Directory for outputs and the manifest")->capture_default_str();
        a.fit.add(cmd);
        add_config(cmd);
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Sparse partial-correlation precision estimation for portfolio selection"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string);

    EstimateArgs est;
    auto *estimate = app.add_subcommand("estimate", "Fit a precision estimator to a returns CSV");
    estimate->add_option("--input", est.input, "Returns CSV (date column, one column per asset)")
        ->required()
        ->check(CLI::ExistingFile);
    estimate->add_option("--estimator", est.estimator, "Estimator")
        ->check(CLI::IsMember({"space-unweighted", "space-weighted", "nodewise", "ledoit-wolf"}))
        ->capture_default_str();
    estimate->add_option("--risk-free", est.risk_free, "CSV of date,rate subtracted from every asset")
        ->check(CLI::ExistingFile);
    add_common(*estimate, est);

    SimulateArgs sim;
    auto *simulate = app.add_subcommand("simulate", "Monte-Carlo study of estimation errors");
    simulate->add_option("--dgp", sim.dgp, "Data-generating process")
        ->check(CLI::IsMember({"toeplitz", "sparse_factor"}))
        ->capture_default_str();
    simulate->add_option("--portfolios", sim.portfolios, "Portfolio kinds")
        ->check(CLI::IsMember({"gmv", "markowitz"}))
        ->capture_default_str();
    simulate->add_option("--estimators", sim.estimators, "Estimators")
        ->check(CLI::IsMember(estimator_names))
        ->capture_default_str();
    simulate->add_option("--sizes", sim.sizes, "Sample sizes as NxP")->capture_default_str();
    simulate->add_option("--replications", sim.replications, "Replications per size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    simulate->add_option("--markowitz-mu", sim.markowitz_mu, "Mean used in estimated Markowitz weights")
        ->check(CLI::IsMember({"sample", "true"}))
        ->capture_default_str();
    simulate->add_option("--mean-variance", sim.mean_variance, "Variance of the simulated mean vector");
    simulate->add_option("--toeplitz-base", sim.toeplitz_base, "Toeplitz correlation base")
        ->check(CLI::Range(0.0, 0.999999))
        ->capture_default_str();
    add_common(*simulate, sim);

    BacktestArgs bt;
    auto *backtest = app.add_subcommand("backtest", "Rolling-window out-of-sample evaluation");
    backtest->add_option("--input", bt.input, "Returns CSV")->required()->check(CLI::ExistingFile);
    backtest->add_option("--estimators", bt.estimators, "Estimators")
        ->check(CLI::IsMember({"space-unweighted", "space-weighted", "nodewise", "ledoit-wolf"}))
        ->capture_default_str();
    backtest->add_option("--portfolio", bt.portfolio, "Portfolio kind")
        ->check(CLI::IsMember({"gmv", "markowitz"}))
        ->capture_default_str();
    backtest->add_option("--target", bt.target, "Markowitz target return per period");
    backtest->add_option("--frequency", bt.frequency, "Data frequency; selects the default target")
        ->check(CLI::IsMember({"monthly", "daily"}))
        ->capture_default_str();
    backtest->add_option("--train-length", bt.train_length, "Estimation window length")
        ->check(CLI::Range(3, std::numeric_limits<int>::max()))
        ->capture_default_str();
    backtest->add_option("--cost-bps", bt.cost_bps, "Proportional transaction cost in basis points")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    backtest->add_option("--rebalance-every", bt.rebalance_every, "Periods between refits")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    backtest->add_flag("--charge-initial-trade", bt.charge_initial_trade, "Charge the cost of the first position");
    backtest->add_option("--risk-free", bt.risk_free, "CSV of date,rate subtracted from every asset")
        ->check(CLI::ExistingFile);
    add_common(*backtest, bt);

    auto *version = app.add_subcommand("version", "Print the version");

    try
    {
        app.parse(argc, argv);
        for (CLI::App *sub : app.get_subcommands())
            apply_fallbacks(*sub);
    }
    catch (const CLI::ParseError &e)
    {
        return app.exit(e);
    }

    RunManifest manifest;
    manifest.started = utc_timestamp();
    manifest.argv.assign(argv, argv + argc);
    std::string output_dir;
    try
    {
        if (version->parsed())
        {
            std::cout << "spaceport " << version_string << '\n';
            return 0;
        }
        if (estimate->parsed())
        {
            manifest.command = "estimate";
            manifest.seed = est.seed;
            output_dir = est.output_dir;
            run_estimate(est, *estimate, manifest);
        }
        else if (simulate->parsed())
        {
            manifest.command = "simulate";
            manifest.seed = sim.seed;
            output_dir = sim.output_dir;
            run_simulate(sim, *simulate, manifest);
        }
        else if (backtest->parsed())
        {
            manifest.command = "backtest";
            manifest.seed = bt.seed;
            output_dir = bt.output_dir;
            run_backtest_cmd(bt, *backtest, manifest);
        }
        manifest.finished = utc_timestamp();
        write_manifest((fs::path(output_dir) / "manifest.json").string(), manifest);
    }
    catch (const CsvError &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const CLI::Error &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
