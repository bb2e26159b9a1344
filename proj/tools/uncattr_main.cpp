#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "uncattr/errors.hpp"
#include "uncattr/pipeline.hpp"

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string out_dir;
    std::string delimiter;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool out_set = false;
    bool delim_set = false;
};

void add_global_flags(CLI::App* cmd, GlobalFlags& g) {
    cmd->add_option("--config", g.config_path, "JSON run configuration");
    cmd->add_option("--seed", g.seed, "override the config seed")
        ->each([&](const std::string&) { g.seed_set = true; });
    cmd->add_option("--out", g.out_dir, "override the output directory")
        ->each([&](const std::string&) { g.out_set = true; });
    cmd->add_option("--delimiter", g.delimiter, "override the CSV delimiter")
        ->each([&](const std::string&) { g.delim_set = true; });
}

uncattr::RunConfig resolve_config(const GlobalFlags& g) {
    uncattr::RunConfig c =
        g.config_path.empty() ? uncattr::RunConfig{} : uncattr::load_config(g.config_path);
    if (g.seed_set) c.seed = g.seed;
    if (g.out_set) c.out_dir = g.out_dir;
    if (g.delim_set) {
        if (g.delimiter.size() != 1)
            throw uncattr::ArgumentError("--delimiter expects a single character");
        c.delimiter = g.delimiter[0];
    }
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uncertainty-aware feature attribution pipeline"};
    app.require_subcommand(1);

    GlobalFlags g_train, g_explain, g_simulate, g_stimuli;

    auto* train = app.add_subcommand("train", "fit the NN and RegNN predictors");
    add_global_flags(train, g_train);

    auto* explain =
        app.add_subcommand("explain", "report one test instance as four chart variants");
    add_global_flags(explain, g_explain);
    int instance_index = 0;
    explain->add_option("--instance", instance_index, "test-set row to explain");
    std::string style;
    explain->add_option("--uncertainty-style", style, "violin, ci, or none");

    auto* simulate =
        app.add_subcommand("simulate", "faithfulness records and improvement curves");
    add_global_flags(simulate, g_simulate);
    std::string levels = "high";
    simulate->add_option("--levels", levels, "comma-separated noise levels");
    bool sweep = false;
    simulate->add_flag("--sweep", sweep, "also emit the measure sweep table");

    auto* stimuli = app.add_subcommand("stimuli", "controlled stimulus selection");
    add_global_flags(stimuli, g_stimuli);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (train->parsed()) {
            uncattr::cmd_train(resolve_config(g_train));
        } else if (explain->parsed()) {
            auto c = resolve_config(g_explain);
            if (!style.empty()) c.uncertainty_style = style;
            uncattr::cmd_explain(c, instance_index);
        } else if (simulate->parsed()) {
            std::vector<std::string> level_list;
            std::size_t start = 0;
            while (start <= levels.size()) {
                const std::size_t comma = levels.find(',', start);
                const std::string item = levels.substr(
                    start, comma == std::string::npos ? std::string::npos : comma - start);
                if (!item.empty()) level_list.push_back(item);
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            if (level_list.empty())
                throw uncattr::ArgumentError("--levels must name at least one level");
            uncattr::cmd_simulate(resolve_config(g_simulate), level_list, sweep);
        } else if (stimuli->parsed()) {
            uncattr::cmd_stimuli(resolve_config(g_stimuli));
        }
    } catch (const uncattr::EmptySelectionError& e) {
        std::cerr << "empty result: " << e.what() << '\n';
        return 3;
    } catch (const uncattr::ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const uncattr::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
