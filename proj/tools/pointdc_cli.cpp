#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "pointdc/config.hpp"
#include "pointdc/errors.hpp"
#include "pointdc/runners.hpp"

namespace {

void print_usage() {
    std::puts("usage: pointdc <command> [--config=FILE] [--key=value ...]");
    std::puts("");
    std::puts("commands:");
    for (const auto& name : pointdc::command_names()) std::printf("  %s\n", name.c_str());
    std::puts("");
    std::puts("Flags mirror config-file keys; flags override the file. Keys:");
    for (const auto& key : pointdc::config_keys()) std::printf("  --%s=...\n", key.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    using namespace pointdc;
    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        if (args.empty()) {
            print_usage();
            return 1;
        }
        if (args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
            print_usage();
            return 0;
        }
        const std::string command = args[0];
        std::string config_path;
        std::vector<std::pair<std::string, std::string>> overrides;
        for (std::size_t i = 1; i < args.size(); ++i) {
            const std::string& a = args[i];
            if (a.rfind("--", 0) != 0)
                throw UsageError("expected --key=value, got '" + a + "'");
            const auto eq = a.find('=');
            if (eq == std::string::npos)
                throw UsageError("flag '" + a + "' is missing '=value'");
            const std::string key = a.substr(2, eq - 2);
            const std::string value = a.substr(eq + 1);
            if (key == "config")
                config_path = value;
            else
                overrides.emplace_back(key, value);
        }
        run_command(command, parse_config(config_path, overrides));
        return 0;
    } catch (const Error& e) {
        std::fprintf(stderr, "error[%s]: %s\n", e.category().c_str(), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error[internal]: %s\n", e.what());
        return 1;
    }
}
