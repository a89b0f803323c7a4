#include <charconv>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "papi/harness.hpp"
#include "papi/serialize.hpp"

namespace {

std::vector<int> parse_k_list(const std::string& arg) {
    std::vector<int> ks;
    std::size_t pos = 0;
    while (pos <= arg.size()) {
        const std::size_t comma = std::min(arg.find(',', pos), arg.size());
        const std::string piece = arg.substr(pos, comma - pos);
        int value = 0;
        const auto res = std::from_chars(piece.data(), piece.data() + piece.size(), value);
        if (res.ec != std::errc() || res.ptr != piece.data() + piece.size())
            throw papi::ConfigError("bad pathway count in --k: '" + piece + "'");
        ks.push_back(value);
        pos = comma + 1;
        if (comma == arg.size()) break;
    }
    return ks;
}

void print_run_digest(const papi::RunReport& report, const std::string& out_dir) {
    const int T = report.config.stream.n_tasks;
    const std::string hash = papi::config_hash_hex(report.config);
    std::cout << "run " << hash << " method=" << report.metrics.method << " tasks=" << T << "\n";
    auto show = [&](const char* label, int i, int t, const char* metric) {
        if (const auto v = papi::find_metric(report.metrics, i, t, metric))
            std::cout << "  " << label << "=" << papi::format_double(*v) << "\n";
    };
    show("avg_stability", 0, T, "avg_stability");
    show("plasticity", T, T, "plasticity");
    show("routing_accuracy", 0, T, "routing_accuracy");
    show("energy_total", 0, T, "energy_total");
    if (report.budget.checked)
        std::cout << "  budget=" << (report.budget.ok ? "ok" : "exceeded")
                  << " margin=" << papi::format_double(report.budget.margin) << "\n";
    std::cout << "wrote " << out_dir << "/summary_" << hash << ".json\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pathway-partitioned continual learning engine"};
    app.require_subcommand(1);

    std::string run_config;
    std::string run_out = "out";
    CLI::App* run = app.add_subcommand("run", "train and evaluate one configuration");
    run->add_option("--config", run_config, "JSON config file")->required();
    run->add_option("--out", run_out, "output directory for emitted reports");

    std::string sweep_config;
    std::string sweep_out = "out";
    std::string k_arg = "1,2,4,8";
    CLI::App* sweep = app.add_subcommand("sweep-k", "pathway-count sweep at matched capacity");
    sweep->add_option("--config", sweep_config, "JSON config file")->required();
    sweep->add_option("--k", k_arg, "comma-separated pathway counts");
    sweep->add_option("--out", sweep_out, "output directory");

    std::vector<std::string> cmp_configs;
    std::string cmp_out = "out";
    CLI::App* cmp =
        app.add_subcommand("compare", "run several configs on one stream and score orderings");
    cmp->add_option("--configs", cmp_configs, "JSON config files")->required()->expected(1, -1);
    cmp->add_option("--out", cmp_out, "output directory");

    std::string in_dir;
    CLI::App* rep = app.add_subcommand("report", "summarize emitted run reports");
    rep->add_option("--in", in_dir, "directory holding summary_*.json files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const papi::RunConfig cfg =
                papi::config_from_json_text(papi::read_text_file(run_config));
            const papi::RunReport report = papi::run_method(cfg);
            papi::emit_report(report, run_out);
            print_run_digest(report, run_out);
        } else if (sweep->parsed()) {
            const papi::RunConfig cfg =
                papi::config_from_json_text(papi::read_text_file(sweep_config));
            const std::vector<int> ks = parse_k_list(k_arg);
            const std::vector<papi::SweepRow> rows = papi::sweep_k(cfg, ks);
            const std::string csv = papi::sweep_csv(rows);
            std::filesystem::create_directories(sweep_out);
            papi::write_text_file(
                sweep_out + "/sweep_" + papi::config_hash_hex(cfg) + ".csv", csv);
            std::cout << csv;
        } else if (cmp->parsed()) {
            std::vector<papi::RunConfig> cfgs;
            cfgs.reserve(cmp_configs.size());
            for (const std::string& path : cmp_configs)
                cfgs.push_back(papi::config_from_json_text(papi::read_text_file(path)));
            const papi::CompareReport result = papi::compare(cfgs);
            for (const papi::RunReport& r : result.runs) papi::emit_report(r, cmp_out);
            const std::string csv = papi::compare_csv(result.rows);
            papi::write_text_file(
                cmp_out + "/compare_" + papi::config_hash_hex(cfgs.front()) + ".csv", csv);
            std::cout << csv;
        } else if (rep->parsed()) {
            std::cout << papi::report_summary_text(in_dir);
        }
    } catch (const papi::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
