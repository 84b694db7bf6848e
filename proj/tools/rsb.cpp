#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rsb/experiment.hpp"

namespace {

const char* kUsage =
    "usage:\n"
    "  rsb run --dataset <synthetic|file:PATH> --schedule <stationary|drift>\n"
    "          --methods rsb,sb,cb0,cb1,nn,offline --seeds 1,2,3 --out DIR\n"
    "          [--config FILE] [parameter flags]\n"
    "  rsb gen-data --spec FILE --out PATH\n"
    "  rsb validate --config FILE\n"
    "\n"
    "parameter flags (also valid as `key = value` lines in a config file):\n";

void print_usage(std::ostream& out) {
    out << kUsage;
    std::size_t col = 0;
    for (const auto& key : rsb::config_keys()) {
        if (col == 0) out << "  ";
        out << "--" << key << ' ';
        col += key.size() + 3;
        if (col > 60) {
            out << '\n';
            col = 0;
        }
    }
    if (col) out << '\n';
    out << "default output directory: $" << rsb::kOutDirEnv << " or ./rsb_out\n";
}

int cmd_run(const std::vector<std::string>& args) {
    const rsb::ExperimentConfig cfg = rsb::parse_config(args);
    rsb::RunOptions options;
    options.log = [](const std::string& line) { std::cerr << line << '\n'; };
    const rsb::ExperimentResult result = rsb::run_experiment(cfg, options);
    for (rsb::Method m : cfg.methods) {
        const auto w = result.median_omega(m);
        std::printf("%-8s median omega_all = %s\n", rsb::to_string(m).c_str(),
                    w ? std::to_string(*w).c_str() : "n/a");
    }
    for (const auto& f : result.failures)
        std::fprintf(stderr, "cell %s seed %llu failed: %s\n", f.method.c_str(),
                     static_cast<unsigned long long>(f.seed), f.message.c_str());
    for (const auto& path : result.written) std::printf("wrote %s\n", path.c_str());
    return result.exit_code;
}

int cmd_gen_data(const std::vector<std::string>& args) {
    CLI::App app{"rsb gen-data"};
    app.set_help_flag();
    std::string spec_path, out_path;
    app.add_option("--spec", spec_path)->required();
    app.add_option("--out", out_path)->required();
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        throw rsb::ConfigError(std::string("usage error: ") + e.what());
    }
    const rsb::GaussianStreamSpec spec = rsb::read_gaussian_spec(spec_path);
    rsb::save_features(rsb::generate_gaussian(spec), out_path);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

int cmd_validate(const std::vector<std::string>& args) {
    CLI::App app{"rsb validate"};
    app.set_help_flag();
    std::string config_path;
    app.add_option("--config", config_path)->required();
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        throw rsb::ConfigError(std::string("usage error: ") + e.what());
    }
    const rsb::ExperimentConfig cfg = rsb::parse_config({"--config", config_path});
    std::printf("config ok (hash %s)\n", rsb::config_hash(cfg).c_str());
    std::cout << rsb::to_text(cfg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        print_usage(std::cerr);
        return 2;
    }
    const std::string command = argv[1];
    const std::vector<std::string> args(argv + 2, argv + argc);
    try {
        if (command == "run") return cmd_run(args);
        if (command == "gen-data") return cmd_gen_data(args);
        if (command == "validate") return cmd_validate(args);
        if (command == "help" || command == "--help" || command == "-h") {
            print_usage(std::cout);
            return 0;
        }
        std::cerr << "unknown command '" << command << "'\n";
        print_usage(std::cerr);
        return 2;
    } catch (const rsb::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
