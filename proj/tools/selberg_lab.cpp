// selberg_lab: sieve divisor windows, compute (modified) Selberg integrals,
// run the verification matrix and fit the short-interval exponent.
//
//   selberg_lab sieve   --n 10000 --h 20 --cache-dir cache
//   selberg_lab selberg --n 65536,262144,1048576 --theta 0.25 --out j3.csv
//   selberg_lab verify  --format json
//   selberg_lab fit     --n 1048576 --h 64,128,256,512
//
// Exit status: 0 ok, 1 invariant/runtime failure, 2 configuration error.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <selberg_lab/commands.hpp>

namespace {

using namespace selberg_lab;

void add_common(CLI::App& sub, RunConfig& cfg, std::string& mean, std::string& format, double& theta)
{
    sub.add_option("--n", cfg.N_list, "N values (comma separated)")->delimiter(',');
    sub.add_option("--theta", theta, "H = floor(N^theta), theta in (0, 0.49]");
    sub.add_option("--h", cfg.H_list, "explicit H values (comma separated)")->delimiter(',');
    sub.add_option("--k", cfg.k, "divisor order")->capture_default_str();
    sub.add_option("--mean", mean, "mean-value convention")->check(CLI::IsMember({"residue", "window-poly"}))->capture_default_str();
    sub.add_option("--hmax", cfg.hmax, "largest correlation shift checked")->capture_default_str();
    sub.add_option("--grid", cfg.gridM, "grid points for kernel scans (0 = default)")->capture_default_str();
    sub.add_option("--threads", cfg.threads, "worker threads (0 = hardware)")->capture_default_str();
    sub.add_option("--out", cfg.out_path, "output file (default stdout)");
    sub.add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
    sub.add_option("--cache-dir", cfg.cache_dir, std::string("divisor table cache (env ") + kCacheEnv + ")");
    sub.add_option("--delta", cfg.delta, "admissible-range parameter delta")->capture_default_str();
    sub.add_option("--eta", cfg.eta, "minimum H exponent eta")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Selberg integrals of the divisor function d_k"};
    app.require_subcommand(1);
    // "--h" is taken by H, so help is long-form only (inherited by subcommands)
    app.set_help_flag("--help", "print this help and exit");

    RunConfig cfg;
    std::string mean = "residue";
    std::string format;
    std::string method = "sliding";
    double theta = -1.0;

    auto* sieve = app.add_subcommand("sieve", "sieve and cache d_k on ]N-H, 2N+H]");
    auto* selberg = app.add_subcommand("selberg", "J and J~ per (N, H), CSV or JSON");
    auto* verify = app.add_subcommand("verify", "run the verification matrix, JSON records");
    auto* fit = app.add_subcommand("fit", "fit A in J~ << N H^{1+A}");
    for (auto* sub : {sieve, selberg, verify, fit})
        add_common(*sub, cfg, mean, format, theta);
    selberg->add_option("--method", method, "sliding or brute")->check(CLI::IsMember({"sliding", "brute"}))->capture_default_str();
    fit->add_option("--method", method, "sliding or brute")->check(CLI::IsMember({"sliding", "brute"}))->capture_default_str();
    fit->add_option("--sample", cfg.samples, "inject N:H:J_tilde instead of running the pipeline");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (theta != -1.0)
        cfg.theta = theta;
    cfg.mean_mode = *parse_mean_mode(mean);
    cfg.method = *parse_method(method);

    CommandResult result;
    if (sieve->parsed()) {
        result = cmd_sieve(cfg);
    } else if (selberg->parsed()) {
        cfg.out_format = format == "json" ? OutFormat::json : OutFormat::csv;
        result = cmd_selberg(cfg);
    } else if (verify->parsed()) {
        if (format == "csv") {
            std::cerr << "configuration error: verify emits JSON only\n";
            return 2;
        }
        result = cmd_verify(cfg);
    } else {
        if (format == "csv") {
            std::cerr << "configuration error: fit emits JSON only\n";
            return 2;
        }
        result = cmd_fit(cfg);
    }

    std::cerr << result.log;
    if (!result.output.empty()) {
        if (cfg.out_path.empty()) {
            std::cout << result.output;
        } else {
            std::ofstream os(cfg.out_path, std::ios::binary | std::ios::trunc);
            os << result.output;
            if (!os) {
                std::cerr << "error: cannot write " << cfg.out_path << "\n";
                return 1;
            }
        }
    }
    return result.exit_code;
}
