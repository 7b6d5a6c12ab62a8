// Command-line front end: decompose, forecast, report, plot.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <string>

#include "namemd/io.hpp"
#include "namemd/pipeline.hpp"
#include "namemd/plot.hpp"
#include "namemd/synthetic.hpp"

namespace {

int fail_line(const std::string& code, const std::string& message) {
    std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << '\n';
    return 1;
}

void cmd_decompose(const std::string& config_path) {
    const auto cfg = namemd::load_config(config_path);
    const auto data = namemd::prepare(cfg);
    namemd::DecompositionContext ctx(data);
    const auto modes = namemd::to_original_units(ctx.reference(), data.scaling);
    namemd::write_decomposition(cfg.output_dir, modes, namemd::diagnostics_table(modes));
    std::cout << "imf_count " << modes.imf_count << " written to " << cfg.output_dir << '\n';
}

void cmd_forecast(const std::string& config_path) {
    const auto cfg = namemd::load_config(config_path);
    const auto art = namemd::run_experiment(cfg);
    namemd::write_artifacts(cfg.output_dir, art);
    namemd::write_report_table(std::cout, art.reports);
}

void cmd_report(const std::string& config_path) {
    const auto cfg = namemd::load_config(config_path);
    const std::filesystem::path dir = cfg.output_dir;
    const auto j = namemd::read_json(dir / "report.json");
    const auto reports = namemd::reports_from_json(j);
    {
        auto out = namemd::detail::open_output(dir / "report_table.csv");
        namemd::write_report_table(out, reports);
    }
    namemd::write_report_table(std::cout, reports);
    for (const auto& dm : j.at("dm_tests"))
        std::cout << "DM " << dm.at("model").get<std::string>() << " S=" << dm.at("statistic").get<double>()
                  << " p=" << dm.at("p_value").get<double>() << '\n';
}

void cmd_plot(const std::string& dir) {
    for (const auto& name : namemd::emit_plots(dir)) std::cout << name << '\n';
}

void cmd_synth(const std::string& path, std::uint64_t seed, long length) {
    namemd::SyntheticOptions opt;
    opt.seed = seed;
    opt.length = length;
    const auto s = namemd::make_synthetic_benchmark(opt);
    auto out = namemd::detail::open_output(path);
    out << "date";
    for (const auto& n : s.channel_names) out << ',' << n;
    out << '\n';
    for (Eigen::Index t = 0; t < s.length(); ++t) {
        out << s.date(t).str();
        for (Eigen::Index c = 0; c < s.channels(); ++c) out << ',' << namemd::detail::fmt_double(s.values(t, c));
        out << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NA-MEMD decomposition-ensemble forecasting"};
    app.require_subcommand(1);
    std::string config, dir, synth_path;
    std::uint64_t seed = 0;
    long length = 240;

    auto* decompose = app.add_subcommand("decompose", "decompose the configured channels and write mode dumps");
    decompose->add_option("config", config, "experiment config")->required();
    auto* forecast = app.add_subcommand("forecast", "run the full single/decomposed forecasting grid");
    forecast->add_option("config", config, "experiment config")->required();
    auto* report = app.add_subcommand("report", "re-render tables from an existing report.json");
    report->add_option("config", config, "experiment config")->required();
    auto* plot = app.add_subcommand("plot", "render SVGs for the artifacts in a directory");
    plot->add_option("dir", dir, "output directory")->required();
    auto* synth = app.add_subcommand("synth", "write the synthetic benchmark as CSV");
    synth->add_option("path", synth_path, "output CSV")->required();
    synth->add_option("--seed", seed, "generator seed");
    synth->add_option("--length", length, "number of months");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail_line("usage", e.what());
    }

    try {
        if (*decompose) cmd_decompose(config);
        else if (*forecast) cmd_forecast(config);
        else if (*report) cmd_report(config);
        else if (*plot) cmd_plot(dir);
        else if (*synth) cmd_synth(synth_path, seed, length);
    } catch (const namemd::Error& e) {
        return fail_line(e.code(), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail_line("bad_report", e.what());
    } catch (const std::exception& e) {
        return fail_line("internal", e.what());
    }
    return 0;
}
