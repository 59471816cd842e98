// cdg: command-line front end.
//
//   cdg verify [--suite NAME] [--lambda L]...
//   cdg precondition --in X.cdg --out G.cdg --metric M [--lambda L] [--beta B] [--axis A] [--rasterize] [--sigma S]
//   cdg train|sweep|ablate [--config FILE] [--seed N] [--data-dir DIR] [--out-dir DIR] [--set key=value]...
//   cdg analyze --in X.cdg [--axis A] [--max-d K] --out corr.csv
//
// Exit codes: 0 ok, 1 verification or run failure, 2 invalid arguments, 3 I/O or parse error.

#include "cdg/errors.hpp"
#include "cdg/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kInvalid = 2;
constexpr int kIo = 3;

struct RunFlags {
    std::string config;
    std::vector<std::uint64_t> seeds;
    std::string data_dir;
    std::string out_dir;
    std::vector<std::string> settings;
    std::size_t jobs = 0;
    bool quiet = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config, "key = value config file");
    cmd->add_option("--seed", f.seeds, "seed(s), overrides the config")->delimiter(',');
    cmd->add_option("--data-dir", f.data_dir, "IDX directory (default $CDG_DATA_DIR)");
    cmd->add_option("--out-dir", f.out_dir, "report directory");
    cmd->add_option("--set", f.settings, "override one config key, key=value");
    cmd->add_option("--jobs", f.jobs, "concurrent seeds");
    cmd->add_flag("--quiet", f.quiet, "no per-trial progress");
}

cdg::RunConfig build_config(const RunFlags& f) {
    cdg::RunConfig cfg = f.config.empty() ? cdg::RunConfig{} : cdg::load_config(f.config);
    for (const auto& s : f.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
        cdg::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (!f.seeds.empty()) cfg.seeds = f.seeds;
    if (!f.data_dir.empty()) cfg.data_dir = f.data_dir;
    if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
    if (f.jobs > 0) cfg.jobs = f.jobs;
    cfg.validate();
    return cfg;
}

cdg::ProgressFn progress_for(const RunFlags& f) {
    if (f.quiet) return {};
    return [](const std::string& line) { std::cerr << line << '\n'; };
}

void print_rows(const std::vector<cdg::SummaryRow>& rows) {
    for (const auto& r : rows)
        std::cout << r.direction << ' ' << r.metric << " lambda=" << r.lambda << " test_acc=" << r.test_acc.mean
                  << " +- " << r.test_acc.std << " (n=" << r.test_acc.count << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Channel-directed gradient preconditioning"};
    app.require_subcommand(1);

    cdg::VerifyOptions verify_opts;
    auto* verify = app.add_subcommand("verify", "run the numerical verification suites");
    verify->add_option("--suite", verify_opts.suite, "run only this suite");
    verify->add_option("--lambda", verify_opts.lambdas, "lambda values (default 0.1,1,10)")->delimiter(',');
    verify->add_option("--seed", verify_opts.seed, "seed of the random inputs");

    std::string in_path;
    std::string out_path;
    std::string metric = "sobolev_tilde_h1";
    std::string axis = "output";
    cdg::PrecondConfig pc;
    auto* precond = app.add_subcommand("precondition", "apply a preconditioner to a CDG1 tensor");
    precond->add_option("--in", in_path, "input tensor")->required();
    precond->add_option("--out", out_path, "output tensor")->required();
    precond->add_option("--metric", metric, "metric name");
    precond->add_option("--lambda", pc.lambda, "smoothness");
    precond->add_option("--beta", pc.blend_beta, "raw-gradient blend for Sobolev metrics");
    precond->add_option("--axis", axis, "output | input");
    precond->add_flag("--rasterize", pc.rasterize, "flatten the tensor first");
    precond->add_option("--sigma", pc.sigma, "laplacian_rasterized strength");

    RunFlags train_flags;
    auto* train = app.add_subcommand("train", "train with every configured seed");
    add_run_flags(train, train_flags);

    RunFlags sweep_flags;
    std::vector<double> lambdas;
    auto* sweep = app.add_subcommand("sweep", "train over a list of lambda values");
    add_run_flags(sweep, sweep_flags);
    sweep->add_option("--lambdas", lambdas, "lambda list (default: config `lambdas`)")->delimiter(',');

    RunFlags ablate_flags;
    auto* ablate = app.add_subcommand("ablate", "compare smoothing directions");
    add_run_flags(ablate, ablate_flags);

    std::string analyze_axis = "output";
    std::size_t max_d = 8;
    std::string analyze_in;
    std::string analyze_out;
    auto* analyze = app.add_subcommand("analyze", "channel correlation of a CDG1 tensor");
    analyze->add_option("--in", analyze_in, "input tensor")->required();
    analyze->add_option("--axis", analyze_axis, "output | input");
    analyze->add_option("--max-d", max_d, "largest distance");
    analyze->add_option("--out", analyze_out, "CSV output")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*verify) return cdg::cmd_verify(verify_opts, std::cout) ? kOk : kVerifyFailed;

        if (*precond) {
            pc.metric = cdg::parse_metric(metric);
            pc.axis = cdg::parse_axis(axis);
            pc.validate();
            const cdg::Tensor4 f = cdg::read_cdg(in_path);
            cdg::write_cdg(out_path, cdg::precondition(f, pc));
            return kOk;
        }
        if (*train) {
            const auto cfg = build_config(train_flags);
            const auto reports = cdg::cmd_train(cfg, progress_for(train_flags));
            std::vector<double> finals;
            for (const auto& r : reports) finals.push_back(r.final_test_acc);
            const auto s = cdg::trial_stats(finals);
            std::cout << cfg.label() << " final test acc " << s.mean << " +- " << s.std << " over " << s.count
                      << " seeds; reports in " << cfg.out_dir.string() << '\n';
            return kOk;
        }
        if (*sweep) {
            const auto cfg = build_config(sweep_flags);
            print_rows(cdg::cmd_sweep(cfg, lambdas.empty() ? cfg.lambdas : lambdas, progress_for(sweep_flags)));
            return kOk;
        }
        if (*ablate) {
            const auto cfg = build_config(ablate_flags);
            print_rows(cdg::cmd_ablate_direction(cfg, progress_for(ablate_flags)));
            return kOk;
        }
        if (*analyze) {
            for (const auto& r : cdg::cmd_analyze(analyze_in, cdg::parse_axis(analyze_axis), max_d, analyze_out))
                std::cout << r.layer << " d=" << r.distance << " corr="
                          << (r.mean_corr ? cdg::format_real(*r.mean_corr) : std::string("undefined")) << '\n';
            return kOk;
        }
    } catch (const cdg::IoError& e) {
        std::cerr << "cdg: " << e.what() << '\n';
        return kIo;
    } catch (const cdg::ParseError& e) {
        std::cerr << "cdg: " << e.what() << '\n';
        return kIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "cdg: invalid argument: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "cdg: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "cdg: " << e.what() << '\n';
        return kVerifyFailed;
    }
    return kInvalid;
}
