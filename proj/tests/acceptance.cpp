// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <memstp/config.hpp>
#include <memstp/fitting.hpp>
#include <memstp/network.hpp>
#include <memstp/protocols.hpp>
#include <memstp/run.hpp>
#include <memstp/tm.hpp>

using namespace memstp;
namespace fs = std::filesystem;

namespace {

struct Verdict {
	bool pass = false;
	std::string detail;
};

std::string fmt(const char *f, auto... args)
{
	char buf[512];
	std::snprintf(buf, sizeof buf, f, args...);
	return buf;
}

int hw_threads() { return static_cast<int>(std::max(2u, std::thread::hardware_concurrency())); }

struct Timer {
	std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
	double seconds() const
	{
		return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
	}
};

Verdict tm_oracle()
{
	Timer timer;
	Rng rng(20240101);
	double worst = 0.0;
	for (int draw = 0; draw < 100; ++draw) {
		const tm::TMParams p{rng.log_uniform(0.1, 10.0), rng.uniform(0.01, 1.0), rng.log_uniform(5e-3, 2.0),
		                     rng.log_uniform(5e-3, 2.0)};
		const int n = 2 + static_cast<int>(rng.uniform() * 9.0);
		std::vector<double> t{0.0};
		for (int k = 1; k < n; ++k) t.push_back(t.back() + rng.log_uniform(1e-3, 1.0));
		const auto exact = tm::peaks_for_train(p, t);
		const auto ref = tm::integrate_reference(p, t, 1e-5);
		for (std::size_t k = 0; k < t.size(); ++k) worst = std::max(worst, std::abs(exact[k] - ref[k]) / std::abs(ref[k]));
	}
	const double sec = timer.seconds();
	return {worst < 1e-4 && sec < 10.0, fmt("max relative error %.2e over 100 draws, %.2f s", worst, sec)};
}

Verdict staircase()
{
	const protocols::PulseTrain train{3, -4.0, 10e-6, 0.4};
	auto peaks = [&train](device::ModePolicy policy) {
		device::Memristor dev(device::DeviceParams{}, policy);
		Rng rng(1);
		std::vector<double> g;
		for (const auto &p : train.pulses(1.0)) {
			dev.pulse(p, rng);
			g.push_back(dev.conductance());
		}
		return g;
	};
	const auto f = peaks(device::ModePolicy::Facilitating);
	const auto s = peaks(device::ModePolicy::Saturating);
	const bool rising = f[0] < f[1] && f[1] < f[2];
	return {rising && s[2] < s[0],
	        fmt("facilitating %.4f < %.4f < %.4f uS; saturating third %.4f vs first %.4f uS", f[0] * 1e6, f[1] * 1e6,
	            f[2] * 1e6, s[2] * 1e6, s[0] * 1e6)};
}

Verdict mode_trend()
{
	Timer timer;
	auto s = config::preset("fig2_stp");
	s.plan.repeats = 10000;
	device::Memristor dev(s.device, s.policy);
	Rng rng(42);
	const auto recs = protocols::run_protocol(dev, s.plan, rng);
	const auto tab = protocols::bin_statistics(recs, s.bins);
	int non_empty = 0;
	for (const auto &b : tab.bins) non_empty += !b.empty();
	const auto v = protocols::first_trend_violation(tab, 3.0);
	const double sec = timer.seconds();
	std::string detail = fmt("%zu events, %d non-empty bins, %d under / %d over, %.2f s", recs.size(), non_empty,
	                         tab.underflow.count, tab.overflow.count, sec);
	if (v) detail += fmt("; bin %d p_S %.3f exceeds bin %d p_S %.3f", v->first, tab.bins[v->first].p_s, v->second,
	                     tab.bins[v->second].p_s);
	return {!v && non_empty >= 2 && sec < 60.0, detail};
}

Verdict drift_restore()
{
	const auto s = config::preset("fig2f_drift");
	device::Memristor dev(s.device, s.policy);
	Rng rng(42);
	const auto recs = protocols::run_protocol(dev, s.plan, rng);
	const double crossing = s.device.g_c + 2.0 * s.device.sigma_s;
	std::size_t first = recs.size();
	for (std::size_t k = 0; k < recs.size() && first == recs.size(); ++k)
		if (recs[k].g0 > crossing) first = k;
	double g_top = 0.0;
	for (const auto &r : recs) {
		g_top = std::max({g_top, r.g0, r.g_post});
		for (double g : r.peaks) g_top = std::max(g_top, g);
	}
	const bool below_max = g_top <= s.device.g_max;
	if (first == recs.size())
		return {false, fmt("g0 never exceeded %.4f uS in %zu trains", crossing * 1e6, recs.size())};
	std::optional<std::size_t> restore;
	for (std::size_t k = first; k < std::min(first + 21, recs.size()) && !restore; ++k) {
		const double g_eq_before = k == 0 ? s.device.g_eq0 : recs[k - 1].g_eq_after;
		if (recs[k].mode == device::Mode::Saturating && recs[k].g_eq_after < g_eq_before) restore = k;
	}
	const bool rises = recs[first].g0 > recs[0].g0;
	return {rises && restore && below_max,
	        fmt("g0 %.4f -> %.4f uS, crossing at train %zu, saturating decrement at train %s, max G %.4f uS",
	            recs[0].g0 * 1e6, recs[first].g0 * 1e6, first, restore ? std::to_string(*restore).c_str() : "none",
	            g_top * 1e6)};
}

Verdict rate_law()
{
	const auto s = config::preset("fig3a_decay");
	device::Memristor dev(s.device, s.policy);
	Rng rng(42);
	const auto pts = protocols::decay_sweep(dev, s.t_ints, rng, s.decay);
	bool ok = true;
	std::string detail = "tau_d";
	for (std::size_t k = 0; k < pts.size(); ++k) {
		if (!pts[k].fit) {
			ok = false;
			detail += " fit-failed";
			continue;
		}
		detail += fmt(" %.3f", pts[k].tau_d());
		if (k > 0 && !(pts[k].tau_d() < pts[k - 1].tau_d())) ok = false;
		if (!pts[k].recovered_at || *pts[k].recovered_at < 1.0 || *pts[k].recovered_at > 120.0) ok = false;
	}
	detail += " s; recovered by";
	for (const auto &pt : pts) detail += pt.recovered_at ? fmt(" %gs", *pt.recovered_at) : std::string(" never");
	return {ok && pts.size() == 5, detail};
}

Verdict amplitude_law()
{
	const auto s = config::preset("fig3b_amplitude");
	device::Memristor dev(s.device, s.policy);
	Rng rng(42);
	const auto res = protocols::amplitude_sweep(dev, s.amplitudes, rng, s.amplitude_w);
	const auto &p = s.device;
	bool ok = res.size() == 6;
	double worst = 0.0;
	for (std::size_t k = 0; k < res.size(); ++k) {
		if (k > 0 && !(res[k].dg_norm > res[k - 1].dg_norm)) ok = false;
		const double law = p.c_amp * std::expm1((std::abs(res[k].v) - p.v_th) / p.v0) * p.u_dev * (p.g_max - p.g_eq0) / p.g_eq0;
		worst = std::max(worst, std::abs(res[k].dg_norm - law) / law);
	}
	return {ok && worst < 1e-9, fmt("dg_norm %.4g .. %.4g, max deviation from law %.2e", res.front().dg_norm,
	                                res.back().dg_norm, worst)};
}

Verdict accumulator()
{
	device::DeviceParams p;
	p.beta = 0.0;
	p.e0 = 2.4e-9;
	p.c_amp = 0.0; // writes leave G unchanged, so every pulse carries the same energy
	const double v = -4.0;
	const double w = 0.48e-9 / (p.g_eq0 * v * v);
	auto fire_index = [&](double tau_acc, double gap, int n) {
		auto q = p;
		q.tau_acc = tau_acc;
		device::Memristor dev(q, device::ModePolicy::Facilitating);
		Rng rng(1);
		for (int k = 1; k <= n; ++k)
			if (dev.pulse({k * gap, v, w}, rng).nonvolatile) return k;
		return 0;
	};
	const int no_leak = fire_index(std::numeric_limits<double>::infinity(), 1.0, 20);
	const int leak = fire_index(p.tau_acc, 600.0, 200);
	return {no_leak == 5 && leak == 0,
	        fmt("pulse energy %.3g nJ; leak off: step at pulse %d; leak on, 600 s gaps: %s", device::pulse_energy(p.g_eq0, v, w) * 1e9,
	            no_leak, leak ? ("step at pulse " + std::to_string(leak)).c_str() : "no step in 200 pulses")};
}

Verdict hysteresis()
{
	const auto s = config::preset("iv_sweep");
	const auto wave = device::triangular_wave(s.iv_amplitude, s.iv_period, s.iv_dt, s.iv_cycles);
	const auto tr = device::iv_sweep(device::rest_state(s.device), s.device, wave, s.iv_dt);
	int zeros = 0;
	bool pinned = true;
	for (const auto &x : tr)
		if (x.v == 0.0) {
			++zeros;
			pinned = pinned && x.i == 0.0;
		}
	const double area = device::loop_area(tr);
	return {pinned && zeros >= 2 * s.iv_cycles + 1 && area > 0,
	        fmt("%d zero crossings all with i = 0: %s; loop area %.3e V*A", zeros, pinned ? "yes" : "no", area)};
}

struct DetectorBatch {
	network::MonteCarloResult ab, ba, ctl_ab, ctl_ba;
	double seconds = 0.0;
};

DetectorBatch detector_batch()
{
	DetectorBatch b;
	Timer timer;
	const auto s = config::preset("fig4_sequence");
	const auto net = network::build_detector(s.topology, s.network_config());
	b.ab = network::monte_carlo(net, s.pattern_spec(network::Order::AB), 1000, 42, hw_threads());
	b.ba = network::monte_carlo(net, s.pattern_spec(network::Order::BA), 1000, 42, hw_threads());
	b.seconds = timer.seconds();
	const auto c = config::preset("fig4_control");
	const auto ctl = network::build_detector(c.topology, c.network_config());
	b.ctl_ab = network::monte_carlo(ctl, c.pattern_spec(network::Order::AB), 1000, 42, hw_threads());
	b.ctl_ba = network::monte_carlo(ctl, c.pattern_spec(network::Order::BA), 1000, 42, hw_threads());
	return b;
}

Verdict detector_stats(const DetectorBatch &b)
{
	const double ba = b.ba.p_spike, ab = b.ab.p_spike;
	const double ctl = std::abs(b.ctl_ba.p_spike - b.ctl_ab.p_spike);
	const bool ok = ba >= 0.55 && ba <= 0.80 && ab >= 0.05 && ab <= 0.25 && b.seconds < 60.0 && ctl < 0.1;
	return {ok, fmt("p(BA) %.3f, p(AB) %.3f in %.2f s; control p(BA) %.3f, p(AB) %.3f", ba, ab, b.seconds,
	                b.ctl_ba.p_spike, b.ctl_ab.p_spike)};
}

Verdict error_mechanism(const DetectorBatch &b)
{
	int ba_miss = 0, ba_miss_s = 0, ab_spike = 0, ab_spike_f = 0;
	for (const auto &t : b.ba.trials)
		if (!t.spiked) {
			++ba_miss;
			ba_miss_s += t.label() == device::EventLabel::STP_S;
		}
	for (const auto &t : b.ab.trials)
		if (t.spiked) {
			++ab_spike;
			ab_spike_f += t.label() == device::EventLabel::STP_F;
		}
	const double fs = ba_miss ? static_cast<double>(ba_miss_s) / ba_miss : 1.0;
	const double ff = ab_spike ? static_cast<double>(ab_spike_f) / ab_spike : 1.0;
	return {fs >= 0.95 && ff >= 0.95, fmt("BA misses with STP_S %d/%d, AB spikes with STP_F %d/%d", ba_miss_s, ba_miss,
	                                      ab_spike_f, ab_spike)};
}

Verdict coincidence()
{
	const auto s = config::preset("s12_coincidence");
	const auto net = network::build_detector(s.topology, s.network_config());
	auto together = s.pattern_spec(network::Order::AB);
	together.simultaneous = true;
	Rng r0(1);
	const bool overlap = network::run_trial(net, together, r0).spiked;
	bool apart_quiet = true;
	for (double gap : {2.0, 3.0, 5.0, 10.0})
		for (auto order : {network::Order::AB, network::Order::BA}) {
			auto pat = s.pattern_spec(order);
			pat.gap = gap;
			Rng r(1);
			apart_quiet = apart_quiet && !network::run_trial(net, pat, r).spiked;
		}
	return {overlap && apart_quiet, fmt("overlapping trains spike: %s; trains 2-10 s apart silent: %s",
	                                    overlap ? "yes" : "no", apart_quiet ? "yes" : "no")};
}

Verdict fit_round_trips()
{
	Rng rng(7);
	std::vector<double> t, g;
	const double g_eq = 2.9e-6, tau = 0.25;
	for (int k = 0; k < 500; ++k) {
		t.push_back(k * 2e-3);
		g.push_back(g_eq + 0.2e-6 * std::exp(-t.back() / tau) * (1 + 0.01 * rng.normal()));
	}
	const double tau_fit = fitting::fit_decay(t, g, g_eq).value("tau_d");
	const double e_decay = std::abs(tau_fit - tau) / tau;

	const tm::TMParams truth{1.0, 0.1, 0.02, 0.5};
	const std::vector<double> ts{0.0, 0.4, 0.8, 1.2, 1.6};
	fitting::TMFitOptions fixed;
	fixed.a = 1.0;
	const auto r1 = fitting::fit_tm(tm::peaks_for_train(truth, ts), ts, fixed);
	const std::vector<double> ti{0.0, 0.03, 0.1, 0.35, 0.9};
	const auto r2 = fitting::fit_tm(tm::peaks_for_train(truth, ti), ti);
	auto tm_err = [](const fitting::FitResult &r) {
		return std::max(std::abs(r.value("u_cap") - 0.1) / 0.1, std::abs(r.value("tau_f") - 0.5) / 0.5);
	};
	const double e_tm = std::max(tm_err(r1), tm_err(r2));

	std::vector<fitting::AmplitudePoint> pts;
	for (double v : {1.5, 2.0, 2.5, 3.0, 3.5, 4.0}) pts.push_back({v, 0.05 * std::expm1((v - 1.0) / 1.5)});
	const auto ra = fitting::fit_amplitude_curve(pts, 1.0);
	const double e_amp = std::max(std::abs(ra.value("c_amp") - 0.05) / 0.05, std::abs(ra.value("v0") - 1.5) / 1.5);
	return {e_decay < 0.02 && e_tm < 0.1 && e_amp < 0.05,
	        fmt("decay %.2e, tm (400 ms equal spacing with a fixed; irregular with a free) %.2e, amplitude %.2e "
	            "relative error",
	            e_decay, e_tm, e_amp)};
}

std::map<std::string, std::string> csv_files(const fs::path &dir)
{
	std::map<std::string, std::string> out;
	for (const auto &e : fs::directory_iterator(dir)) {
		if (e.path().extension() != ".csv") continue;
		std::ifstream in(e.path(), std::ios::binary);
		std::ostringstream ss;
		ss << in.rdbuf();
		out[e.path().filename().string()] = ss.str();
	}
	return out;
}

Verdict reproducibility()
{
	const auto root = fs::temp_directory_path() / "memstp_acceptance";
	fs::remove_all(root);
	int files = 0;
	std::string bad;
	for (const auto &name : config::preset_names()) {
		const auto a = root / (name + "_a"), b = root / (name + "_b");
		run::simulate(config::preset(name), 42, a.string(), 1);
		std::ifstream in(a / "manifest.json");
		std::ostringstream ss;
		ss << in.rdbuf();
		const auto rc = config::parse_config(ss.str());
		run::simulate(config::resolve(rc), rc.seed, b.string(), hw_threads());
		const auto fa = csv_files(a), fb = csv_files(b);
		files += static_cast<int>(fa.size());
		if (fa.empty() || fa != fb) bad += " " + name;
	}
	fs::remove_all(root);
	return {bad.empty(), fmt("%zu presets, %d CSV files compared, threads 1 vs %d%s", config::preset_names().size(),
	                         files, hw_threads(), bad.empty() ? "" : (", mismatch:" + bad).c_str())};
}

} // namespace

int main()
{
	std::vector<std::pair<std::string, std::function<Verdict()>>> criteria;
	DetectorBatch batch;
	bool have_batch = false;
	auto with_batch = [&](Verdict (*f)(const DetectorBatch &)) {
		return [&, f] {
			if (!have_batch) {
				batch = detector_batch();
				have_batch = true;
			}
			return f(batch);
		};
	};
	criteria.emplace_back("TM oracle equivalence", tm_oracle);
	criteria.emplace_back("facilitation staircase", staircase);
	criteria.emplace_back("mode-probability trend", mode_trend);
	criteria.emplace_back("drift and restore", drift_restore);
	criteria.emplace_back("rate law", rate_law);
	criteria.emplace_back("amplitude law", amplitude_law);
	criteria.emplace_back("accumulator transition", accumulator);
	criteria.emplace_back("pinched hysteresis", hysteresis);
	criteria.emplace_back("sequence detector statistics", with_batch(detector_stats));
	criteria.emplace_back("error mechanism", with_batch(error_mechanism));
	criteria.emplace_back("coincidence detector", coincidence);
	criteria.emplace_back("fit round trips", fit_round_trips);
	criteria.emplace_back("reproducibility", reproducibility);

	int failed = 0;
	for (std::size_t k = 0; k < criteria.size(); ++k) {
		Verdict v;
		try {
			v = criteria[k].second();
		} catch (const std::exception &e) {
			v = {false, std::string("exception: ") + e.what()};
		}
		failed += !v.pass;
		std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), v.detail.c_str());
		std::fflush(stdout);
	}
	return failed == 0 ? 0 : 1;
}
