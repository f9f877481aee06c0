#include "npsh/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Monge-Ampere solver for (n-1)-PSH functions on flat complex tori"};
    std::string config;
    npsh::RunOptions options;
    app.add_option("--config", config, "YAML run configuration")->required();
    app.add_option("--threads", options.threads, "worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
    app.add_flag("--quiet", options.quiet, "only print errors and the recovered-u error");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : npsh::kExitConfigError;
    }
    return npsh::run(config, options, std::cerr);
}
