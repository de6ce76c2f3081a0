#pragma once

/*
 * Experiment runners behind the command-line tool. Each run writes its CSV
 * files, summary.json and manifest.json into one output directory. Outputs
 * depend only on the settings and the seed, never on the thread count.
 */

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <memstp/config.hpp>
#include <memstp/csv.hpp>
#include <memstp/device.hpp>
#include <memstp/fitting.hpp>
#include <memstp/network.hpp>
#include <memstp/protocols.hpp>
#include <memstp/rng.hpp>

namespace memstp::run {

using config::json;
using config::Kind;
using config::Settings;

struct Output {
	std::string dir;
	std::vector<std::string> files;
	json summary = json::object();
};

namespace io {

inline std::string join(const std::string &dir, const std::string &name)
{
	return (std::filesystem::path(dir) / name).string();
}

inline void table(Output &out, const csv::Table &t, const std::string &name)
{
	csv::emit(t, join(out.dir, name));
	out.files.push_back(name);
}

inline void json_file(Output &out, const json &j, const std::string &name)
{
	csv::write_file(join(out.dir, name), j.dump(2) + "\n");
	out.files.push_back(name);
}

template <class T>
json or_null(const std::optional<T> &v)
{
	return v ? json(*v) : json(nullptr);
}

inline json fit_json(const fitting::FitResult &r)
{
	json p = json::object();
	for (const auto &x : r.params) p[x.name] = x.value;
	return {{"params", p}, {"sse", r.sse}, {"iterations", r.iterations}, {"converged", r.converged},
	        {"degenerate", r.degenerate}};
}

} // namespace io

inline void protocol(const Settings &s, std::uint64_t seed, Output &out)
{
	device::Memristor dev(s.device, s.policy);
	Rng rng(seed);
	const auto recs = protocols::run_protocol(dev, s.plan, rng);
	io::table(out, csv::records_table(recs), "events.csv");

	const auto tab = protocols::bin_statistics(recs, s.bins);
	csv::Table bins{{"bin", "lo_S", "hi_S", "count", "n_f", "n_s", "p_f", "p_s"}, {}};
	auto row = [&bins](const std::string &name, const protocols::BinStat &b) {
		bins.add({name, b.lo, b.hi, static_cast<long long>(b.count), static_cast<long long>(b.n_f),
		          static_cast<long long>(b.n_s), b.p_f, b.p_s});
	};
	row("underflow", tab.underflow);
	for (std::size_t k = 0; k < tab.bins.size(); ++k) row(std::to_string(k), tab.bins[k]);
	row("overflow", tab.overflow);
	io::table(out, bins, "bins.csv");

	// single-train transients in both modes, from the same initial device
	for (auto [policy, name] : {std::pair{device::ModePolicy::Facilitating, "transient_f.csv"},
	                            std::pair{device::ModePolicy::Saturating, "transient_s.csv"}}) {
		device::Memristor d(s.device, policy);
		Rng r(derive_seed(seed, 1));
		const double span = s.plan.train.duration() + 2.0;
		io::table(out, csv::trace_table(protocols::train_trace(d, s.plan.train, 1.0, span, s.plan.sample_dt, r)), name);
	}

	int n_s = 0, nv = 0;
	double g_peak_max = 0.0;
	for (const auto &r : recs) {
		n_s += r.label == device::EventLabel::STP_S;
		nv += r.nonvolatile;
		for (double p : r.peaks) g_peak_max = std::max(g_peak_max, p);
	}
	const double crossing = s.device.g_c + 2.0 * s.device.sigma_s;
	std::optional<int> first_cross, first_s_after;
	for (const auto &r : recs) {
		if (!first_cross && r.g0 > crossing) first_cross = r.index;
		if (first_cross && !first_s_after && r.label == device::EventLabel::STP_S) first_s_after = r.index;
	}
	const auto violation = protocols::first_trend_violation(tab);
	out.summary = {{"events", recs.size()},
	               {"stp_s_events", n_s},
	               {"nonvolatile_events", nv},
	               {"underflow", tab.underflow.count},
	               {"overflow", tab.overflow.count},
	               {"trend_ok", !violation},
	               {"max_conductance_S", g_peak_max},
	               {"crossing_threshold_S", crossing},
	               {"first_crossing_index", io::or_null(first_cross)},
	               {"first_stp_s_after_crossing", io::or_null(first_s_after)}};
}

inline void decay(const Settings &s, std::uint64_t seed, Output &out)
{
	const device::Memristor proto(s.device, s.policy);
	Rng rng(seed);
	const auto pts = protocols::decay_sweep(proto, s.t_ints, rng, s.decay);
	csv::Table tab{{"t_int_s", "tau_d_s", "amplitude_S", "sse", "g0_S", "g_peak_S", "recovered_at_s", "fit_error"}, {}};
	csv::Table relax{{"t_int_s", "time_s", "conductance_S"}, {}};
	csv::Table recov{{"t_int_s", "time_s", "conductance_S"}, {}};
	json entries = json::array();
	for (const auto &p : pts) {
		const double nan = std::nan("");
		tab.add({p.t_int, p.tau_d(), p.fit ? p.fit->value("amplitude") : nan, p.fit ? p.fit->sse : nan, p.g0, p.g_peak,
		         p.recovered_at ? *p.recovered_at : nan, p.error});
		for (const auto &x : p.relaxation) relax.add({p.t_int, x.t, x.g});
		for (const auto &x : p.recovery) recov.add({p.t_int, x.t, x.g});
		entries.push_back({{"t_int_s", p.t_int},
		                   {"tau_d_s", p.fit ? json(p.tau_d()) : json(nullptr)},
		                   {"recovered_at_s", io::or_null(p.recovered_at)},
		                   {"error", p.error}});
	}
	io::table(out, tab, "decay.csv");
	io::table(out, relax, "relaxation.csv");
	io::table(out, recov, "recovery.csv");
	out.summary = {{"points", entries}};
}

inline void amplitude(const Settings &s, std::uint64_t seed, Output &out)
{
	const device::Memristor proto(s.device, s.policy);
	Rng rng(seed);
	const auto resp = protocols::amplitude_sweep(proto, s.amplitudes, rng, s.amplitude_w);
	csv::Table tab{{"v_V", "g_pre_S", "jump_S", "dg_norm"}, {}};
	std::vector<fitting::AmplitudePoint> pts;
	for (const auto &r : resp) {
		tab.add({r.v, r.g_pre, r.jump, r.dg_norm});
		pts.push_back({r.v, r.dg_norm});
	}
	io::table(out, tab, "amplitude.csv");
	json fit;
	try {
		fit = io::fit_json(fitting::fit_amplitude_curve(pts, s.device.v_th));
	} catch (const fit_error &e) {
		fit = {{"error", e.what()}};
	}
	out.summary = {{"points", resp.size()}, {"fit", fit}};
}

inline void iv(const Settings &s, std::uint64_t, Output &out)
{
	const auto wave = device::triangular_wave(s.iv_amplitude, s.iv_period, s.iv_dt, s.iv_cycles);
	const auto trace = device::iv_sweep(device::rest_state(s.device), s.device, wave, s.iv_dt);
	csv::Table tab{{"time_s", "voltage_V", "current_A"}, {}};
	double i_at_zero = 0.0;
	for (const auto &x : trace) {
		tab.add({x.t, x.v, x.i});
		if (x.v == 0.0) i_at_zero = std::max(i_at_zero, std::abs(x.i));
	}
	io::table(out, tab, "iv.csv");
	out.summary = {{"samples", trace.size()}, {"loop_area_VA", device::loop_area(trace)}, {"max_abs_i_at_zero_A", i_at_zero}};
}

struct DetectorRun {
	std::string name;
	network::PatternSpec pattern;
};

inline std::vector<DetectorRun> detector_runs(const Settings &s)
{
	using network::Order;
	std::vector<DetectorRun> runs;
	if (s.topology == network::Topology::CoincidenceDetector) {
		if (s.pattern == "both") {
			auto together = s.pattern_spec(Order::AB);
			together.simultaneous = true;
			runs.push_back({"overlap", together});
			runs.push_back({"apart", s.pattern_spec(Order::AB)});
		} else {
			runs.push_back({"apart_" + s.pattern, s.pattern_spec(s.pattern == "ab" ? Order::AB : Order::BA)});
		}
		return runs;
	}
	if (s.pattern != "ba") runs.push_back({"ab", s.pattern_spec(Order::AB)});
	if (s.pattern != "ab") runs.push_back({"ba", s.pattern_spec(Order::BA)});
	return runs;
}

inline void detector(const Settings &s, std::uint64_t seed, int threads, Output &out)
{
	const auto net = network::build_detector(s.topology, s.network_config());
	json runs = json::object();
	for (const auto &run : detector_runs(s)) {
		const auto mc = network::monte_carlo(net, run.pattern, s.trials, seed, threads, 1);
		csv::Table tab{{"trial", "spiked", "n_spikes", "first_spike_s", "label"}, {}};
		int spike_f = 0, spike_s = 0, miss_f = 0, miss_s = 0;
		for (std::size_t i = 0; i < mc.trials.size(); ++i) {
			const auto &t = mc.trials[i];
			const auto lab = t.label();
			tab.add({static_cast<long long>(i), static_cast<long long>(t.spiked),
			         static_cast<long long>(t.spike_times.size()), t.spiked ? t.spike_times.front() : std::nan(""),
			         lab ? std::string(device::to_string(*lab)) : std::string("none")});
			if (lab) {
				const bool f = *lab == device::EventLabel::STP_F;
				if (t.spiked) (f ? spike_f : spike_s) += 1;
				else (f ? miss_f : miss_s) += 1;
			}
		}
		io::table(out, tab, "trials_" + run.name + ".csv");
		const auto &first = mc.trials.front();
		csv::Table trace{{"time_s", "vmem_V", "conductance_S", "current_A"}, {}};
		for (std::size_t k = 0; k < first.t.size(); ++k)
			trace.add({first.t[k], first.vmem[k], first.conductance[k], first.current[k]});
		io::table(out, trace, "trace_" + run.name + ".csv");
		runs[run.name] = {{"trials", s.trials},          {"spikes", mc.spikes},   {"p_spike", mc.p_spike},
		                  {"spikes_stp_f", spike_f},     {"spikes_stp_s", spike_s}, {"misses_stp_f", miss_f},
		                  {"misses_stp_s", miss_s}};
	}
	out.summary = {{"topology", std::string(network::to_string(s.topology))}, {"runs", runs}};
}

inline Output simulate(const Settings &s, std::uint64_t seed, const std::string &out_dir, int threads = 1)
{
	config::validate(s);
	std::filesystem::create_directories(out_dir);
	Output out;
	out.dir = out_dir;
	switch (s.kind) {
	case Kind::Protocol:  protocol(s, seed, out); break;
	case Kind::Decay:     decay(s, seed, out); break;
	case Kind::Amplitude: amplitude(s, seed, out); break;
	case Kind::Iv:        iv(s, seed, out); break;
	case Kind::Detector:  detector(s, seed, threads, out); break;
	}
	json summary = {{"preset", s.preset}, {"experiment", std::string(config::to_string(s.kind))}, {"seed", seed}};
	for (const auto &[k, v] : out.summary.items()) summary[k] = v;
	out.summary = summary;
	io::json_file(out, out.summary, "summary.json");
	io::json_file(out, config::manifest(s, seed), "manifest.json");
	return out;
}

enum class FitKind { Decay, TM, Amplitude };

struct FitInput {
	FitKind kind = FitKind::Decay;
	std::string path;
	std::optional<double> g_eq; // decay: equilibrium; defaults to the last sample
	double v_th = device::DeviceParams{}.v_th;
	std::optional<double> tm_a; // tm: fixed peak scale
};

/*
 * Fits a CSV file. Expected columns: decay time_s, conductance_S; tm
 * time_s, peak; amplitude v_V, dg_norm.
 */
inline Output fit_file(const FitInput &in, const std::string &out_dir)
{
	const auto doc = csv::read(in.path);
	fitting::FitResult r;
	json extra = json::object();
	switch (in.kind) {
	case FitKind::Decay: {
		const auto t = doc.numbers("time_s");
		const auto g = doc.numbers("conductance_S");
		if (g.empty()) throw fit_error("fit decay: input has no samples");
		const double g_eq = in.g_eq ? *in.g_eq : g.back();
		extra["g_eq_S"] = g_eq;
		r = fitting::fit_decay(t, g, g_eq);
		break;
	}
	case FitKind::TM: {
		fitting::TMFitOptions opt;
		opt.a = in.tm_a;
		r = fitting::fit_tm(doc.numbers("peak"), doc.numbers("time_s"), opt);
		break;
	}
	case FitKind::Amplitude: {
		const auto v = doc.numbers("v_V");
		const auto d = doc.numbers("dg_norm");
		std::vector<fitting::AmplitudePoint> pts;
		for (std::size_t k = 0; k < v.size(); ++k) pts.push_back({v[k], d[k]});
		extra["v_th_V"] = in.v_th;
		r = fitting::fit_amplitude_curve(pts, in.v_th);
		break;
	}
	}
	std::filesystem::create_directories(out_dir);
	Output out;
	out.dir = out_dir;
	csv::Table tab{{"name", "unit", "value"}, {}};
	for (const auto &p : r.params) tab.add({p.name, p.unit, p.value});
	io::table(out, tab, "fit.csv");
	out.summary = io::fit_json(r);
	for (const auto &[k, v] : extra.items()) out.summary[k] = v;
	io::json_file(out, out.summary, "fit.json");
	return out;
}

} // namespace memstp::run
