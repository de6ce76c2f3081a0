// memstp command-line tool. Exit codes: 0 success, 1 I/O or fit failure,
// 2 configuration or usage error, 3 model contract violation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#ifdef MEMSTP_CLI11_SINGLE_HEADER
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <memstp/config.hpp>
#include <memstp/csv.hpp>
#include <memstp/run.hpp>

namespace {

using namespace memstp;

config::RunConfig load(const std::string &path)
{
	return config::parse_config(csv::read_file(path));
}

void report(const run::Output &out)
{
	std::cout << out.summary.dump(2) << "\n";
	for (const auto &f : out.files) std::cerr << "wrote " << run::io::join(out.dir, f) << "\n";
}

} // namespace

int main(int argc, char **argv)
{
	CLI::App app{"Volatile memristor short-term plasticity simulator"};
	app.set_version_flag("--version", std::string(config::tool_version));
	app.require_subcommand(1);

	int threads = 1;
	app.add_option("--threads", threads, "Monte-Carlo worker threads")->check(CLI::PositiveNumber);

	// simulate
	auto *sim = app.add_subcommand("simulate", "Run a configured preset");
	std::string sim_config;
	std::optional<std::uint64_t> sim_seed;
	std::optional<std::string> sim_out;
	sim->add_option("--config", sim_config, "JSON run configuration")->required();
	sim->add_option("--seed", sim_seed, "Override the configured seed");
	sim->add_option("--out", sim_out, "Override the output directory");
	sim->add_option("--threads", threads, "Monte-Carlo worker threads")->check(CLI::PositiveNumber);

	// fit
	auto *fit = app.add_subcommand("fit", "Fit a model to a CSV file");
	std::string fit_kind, fit_input, fit_out = "out";
	std::optional<double> fit_g_eq, fit_a;
	double fit_v_th = device::DeviceParams{}.v_th;
	fit->add_option("kind", fit_kind, "decay | tm | amplitude")->required()->check(CLI::IsMember({"decay", "tm", "amplitude"}));
	fit->add_option("--input", fit_input, "Input CSV")->required();
	fit->add_option("--out", fit_out, "Output directory");
	fit->add_option("--g-eq", fit_g_eq, "decay: equilibrium conductance (S), default the last sample");
	fit->add_option("--v-th", fit_v_th, "amplitude: write threshold (V)");
	fit->add_option("--a", fit_a, "tm: hold the peak scale fixed");

	// detect
	auto *det = app.add_subcommand("detect", "Monte-Carlo detector statistics");
	std::string det_topology = "sequence", det_pattern = "both";
	int det_trials = 1000;
	std::uint64_t det_seed = 0;
	std::optional<std::string> det_config, det_out;
	det->add_option("--topology", det_topology)->check(CLI::IsMember({"sequence", "control", "coincidence"}));
	det->add_option("--pattern", det_pattern)->check(CLI::IsMember({"ab", "ba", "both"}));
	det->add_option("--trials", det_trials)->check(CLI::PositiveNumber);
	det->add_option("--seed", det_seed);
	det->add_option("--config", det_config, "Start from this configuration instead of the topology's preset");
	det->add_option("--out", det_out, "Write CSV files here");
	det->add_option("--threads", threads, "Monte-Carlo worker threads")->check(CLI::PositiveNumber);

	// sweep
	auto *sw = app.add_subcommand("sweep", "Device sweeps");
	std::string sw_kind, sw_config;
	std::optional<std::string> sw_out;
	sw->add_option("kind", sw_kind, "iv | decay | amplitude")->required()->check(CLI::IsMember({"iv", "decay", "amplitude"}));
	sw->add_option("--config", sw_config, "JSON run configuration")->required();
	sw->add_option("--out", sw_out, "Override the output directory");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		const int rc = app.exit(e);
		return rc == 0 ? 0 : 2;
	}

	try {
		if (*sim) {
			auto rc = load(sim_config);
			if (sim_seed) rc.seed = *sim_seed;
			report(run::simulate(config::resolve(rc), rc.seed, sim_out.value_or(rc.out_dir), threads));
		} else if (*fit) {
			run::FitInput in;
			in.kind = fit_kind == "decay" ? run::FitKind::Decay : fit_kind == "tm" ? run::FitKind::TM : run::FitKind::Amplitude;
			in.path = fit_input;
			in.g_eq = fit_g_eq;
			in.v_th = fit_v_th;
			in.tm_a = fit_a;
			report(run::fit_file(in, fit_out));
		} else if (*det) {
			config::RunConfig rc;
			if (det_config) {
				rc = load(*det_config);
			} else {
				rc.preset = det_topology == "control" ? "fig4_control"
				            : det_topology == "coincidence" ? "s12_coincidence" : "fig4_sequence";
			}
			rc.seed = det_seed;
			rc.overrides["experiment"] = "detector";
			rc.overrides["topology"] = det_topology;
			rc.overrides["pattern"] = det_pattern;
			rc.overrides["trials"] = det_trials;
			const auto s = config::resolve(rc);
			report(run::simulate(s, rc.seed, det_out.value_or(rc.out_dir), threads));
		} else if (*sw) {
			auto rc = load(sw_config);
			rc.overrides["experiment"] = sw_kind;
			report(run::simulate(config::resolve(rc), rc.seed, sw_out.value_or(rc.out_dir), threads));
		}
	} catch (const config_error &e) {
		std::cerr << "config error: " << e.what() << "\n";
		return 2;
	} catch (const contract_error &e) {
		std::cerr << "contract violation: " << e.what() << "\n";
		return 3;
	} catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 1;
	}
	return 0;
}
