#pragma once

// Stimulus protocols run against a single device, event labelling and
// conductance-binned occurrence statistics.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <memstp/device.hpp>
#include <memstp/error.hpp>
#include <memstp/fitting.hpp>
#include <memstp/rng.hpp>

namespace memstp::protocols {

using device::EventLabel;
using device::Memristor;
using device::Mode;
using device::Pulse;

struct PulseTrain {
	int n = 3;
	double v = -4.0;
	double w = 10e-6;
	double t_int = 0.4;

	double duration() const { return (n - 1) * t_int + w; }

	std::vector<Pulse> pulses(double t0) const
	{
		std::vector<Pulse> out;
		for (int k = 0; k < n; ++k) out.push_back({t0 + k * t_int, v, w});
		return out;
	}

	void validate() const
	{
		detail::require(n >= 1, "train: need n >= 1");
		detail::require(w > 0, "train: need w > 0");
		detail::require(n == 1 || t_int > w, "train: need t_int > w");
	}
};

struct ExperimentPlan {
	PulseTrain train;
	int repeats = 600;
	double t_rec = 10.0;      // from the last pulse of one train to the first of the next
	double read_v = 0.1;      // probe amplitude
	double sample_dt = 1e-3;  // conductance trace sampling period
	double post_delay = 0.01; // g_post probe delay after the last pulse

	void validate(const device::DeviceParams &dp) const
	{
		train.validate();
		detail::require(repeats >= 1, "plan: need repeats >= 1");
		detail::require(t_rec > train.duration(), "plan: t_rec must exceed the train duration");
		detail::require(std::abs(read_v) < dp.v_th, "plan: |read_v| must be below the device threshold");
		detail::require(sample_dt > 0, "plan: sample_dt must be > 0");
		detail::require(post_delay > 0 && post_delay < t_rec, "plan: need 0 < post_delay < t_rec");
	}
};

struct EventRecord {
	int index = 0;
	double t0 = 0.0;
	double g0 = 0.0;
	double g_post = 0.0;
	std::vector<double> peaks;
	EventLabel label = EventLabel::STP_F;
	Mode mode = Mode::Facilitating;
	bool nonvolatile = false; // a barrier crossing happened during this train
	double g_eq_after = 0.0;
};

/*
 * Applies one train starting at t0: probe g0, pulse the train (recording the
 * conductance right after each pulse), probe g_post after post_delay.
 */
inline EventRecord run_event(Memristor &dev, const ExperimentPlan &plan, double t0, int index, Rng &rng)
{
	EventRecord rec;
	rec.index = index;
	rec.t0 = t0;
	rec.g0 = dev.read(t0, plan.read_v, plan.train.w);
	double t_last = t0;
	for (const auto &p : plan.train.pulses(t0)) {
		auto r = dev.pulse(p, rng);
		rec.peaks.push_back(dev.conductance());
		rec.nonvolatile = rec.nonvolatile || r.nonvolatile;
		t_last = p.t;
	}
	rec.mode = dev.state().mode;
	rec.g_post = dev.read(t_last + plan.post_delay, plan.read_v, plan.train.w);
	rec.label = device::classify_event(rec.g0, rec.g_post);
	rec.g_eq_after = dev.state().g_eq;
	return rec;
}

// Trains start at t_start + k * ((n - 1) * t_int + t_rec).
inline std::vector<EventRecord> run_protocol(Memristor &dev, const ExperimentPlan &plan, Rng &rng)
{
	plan.validate(dev.params());
	std::vector<EventRecord> out;
	out.reserve(static_cast<std::size_t>(plan.repeats));
	const double period = (plan.train.n - 1) * plan.train.t_int + plan.t_rec;
	const double t_start = dev.time();
	for (int k = 0; k < plan.repeats; ++k)
		out.push_back(run_event(dev, plan, t_start + k * period, k, rng));
	return out;
}

struct TraceSample {
	double t;
	double g;
};

/*
 * Conductance sampled every sample_dt from t0 to t0 + duration while the
 * train is applied. Samples are non-perturbing; a sample coinciding with a
 * pulse onset is taken after the pulse.
 */
inline std::vector<TraceSample> train_trace(Memristor &dev, const PulseTrain &train, double t0, double duration,
                                            double sample_dt, Rng &rng)
{
	detail::require(sample_dt > 0 && duration >= 0, "train_trace: bad sampling");
	const auto pulses = train.pulses(t0);
	std::vector<TraceSample> out;
	std::size_t next = 0;
	const auto n = static_cast<std::size_t>(std::floor(duration / sample_dt + 1e-9));
	for (std::size_t k = 0; k <= n; ++k) {
		const double t = t0 + static_cast<double>(k) * sample_dt;
		while (next < pulses.size() && pulses[next].t <= t) dev.pulse(pulses[next++], rng);
		out.push_back({t, dev.conductance_at(t)});
	}
	while (next < pulses.size()) dev.pulse(pulses[next++], rng);
	return out;
}

struct BinSpec {
	double lo = 2.85e-6;
	double hi = 3.1e-6;
	int n_bins = 17;

	double width() const { return (hi - lo) / n_bins; }

	void validate() const
	{
		detail::require(lo < hi, "bins: need lo < hi");
		detail::require(n_bins >= 1, "bins: need n_bins >= 1");
	}
};

struct BinStat {
	double lo = 0.0;
	double hi = 0.0;
	int count = 0;
	int n_f = 0;
	int n_s = 0;
	double p_f = 0.0;
	double p_s = 0.0;
	bool empty() const { return count == 0; }
};

struct BinTable {
	std::vector<BinStat> bins;
	BinStat underflow; // g0 < lo
	BinStat overflow;  // g0 > hi
};

// Bin of g0 or -1 / n_bins for under- and overflow. Bins are [lo_k, hi_k)
// except the last, which also holds hi.
inline int bin_index(const BinSpec &b, double g0)
{
	if (g0 < b.lo) return -1;
	if (g0 > b.hi) return b.n_bins;
	const int k = static_cast<int>(std::floor((g0 - b.lo) / b.width()));
	return std::min(k, b.n_bins - 1);
}

inline BinTable bin_statistics(std::span<const EventRecord> records, const BinSpec &b)
{
	b.validate();
	BinTable tab;
	tab.bins.resize(static_cast<std::size_t>(b.n_bins));
	for (int k = 0; k < b.n_bins; ++k) {
		tab.bins[k].lo = b.lo + k * b.width();
		tab.bins[k].hi = k + 1 == b.n_bins ? b.hi : b.lo + (k + 1) * b.width();
	}
	tab.underflow.hi = b.lo;
	tab.underflow.lo = -std::numeric_limits<double>::infinity();
	tab.overflow.lo = b.hi;
	tab.overflow.hi = std::numeric_limits<double>::infinity();
	for (const auto &r : records) {
		const int k = bin_index(b, r.g0);
		BinStat &s = k < 0 ? tab.underflow : (k >= b.n_bins ? tab.overflow : tab.bins[k]);
		++s.count;
		(r.label == EventLabel::STP_F ? s.n_f : s.n_s) += 1;
	}
	auto finish = [](BinStat &s) {
		if (s.count == 0) return;
		s.p_f = static_cast<double>(s.n_f) / s.count;
		s.p_s = static_cast<double>(s.n_s) / s.count;
	};
	for (auto &s : tab.bins) finish(s);
	finish(tab.underflow);
	finish(tab.overflow);
	return tab;
}

// Wilson score interval for k successes out of n.
inline std::pair<double, double> wilson_interval(int k, int n, double z)
{
	const double p = static_cast<double>(k) / n, z2 = z * z;
	const double denom = 1.0 + z2 / n;
	const double centre = (p + z2 / (2.0 * n)) / denom;
	const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4.0 * n * n)) / denom;
	return {centre - half, centre + half};
}

/*
 * Returns the first pair of non-empty bins (i < j) whose z-sigma Wilson
 * intervals are disjoint with bin j below bin i, i.e. a decrease in p_s that
 * binomial noise cannot explain.
 */
inline std::optional<std::pair<int, int>> first_trend_violation(const BinTable &tab, double z = 3.0)
{
	const auto &b = tab.bins;
	for (std::size_t i = 0; i < b.size(); ++i) {
		if (b[i].empty()) continue;
		const double lo_i = wilson_interval(b[i].n_s, b[i].count, z).first;
		for (std::size_t j = i + 1; j < b.size(); ++j) {
			if (b[j].empty()) continue;
			if (wilson_interval(b[j].n_s, b[j].count, z).second < lo_i)
				return std::pair<int, int>{static_cast<int>(i), static_cast<int>(j)};
		}
	}
	return std::nullopt;
}

struct DecaySweepOptions {
	int n_pulses = 2;
	double v = 4.0;
	double w = 10e-6;
	double sample_dt = 2e-3;
	double window = 3.0; // length of the sampled relaxation after the last pulse
	std::vector<double> recovery_checkpoints{1, 2, 5, 10, 20, 60, 120};
	double recovery_tol = 0.01;
};

struct DecayPoint {
	double t_int = 0.0;
	std::optional<fitting::FitResult> fit;
	std::string error;
	double g0 = 0.0;           // before the train
	double g_peak = 0.0;       // after the last pulse
	double g_eq = 0.0;         // equilibrium after the train
	std::vector<TraceSample> relaxation;
	std::vector<TraceSample> recovery; // conductance at each checkpoint after the train
	// First checkpoint where |G - g0| is within recovery_tol of the volatile
	// excursion |g_peak - g0|. Stricter than recovery_tol * g0.
	std::optional<double> recovered_at;

	double tau_d() const { return fit ? fit->value("tau_d") : std::nan(""); }
};

/*
 * For each interval: a fresh copy of `proto` receives an n-pulse train, the
 * relaxation after the last pulse is sampled for `window` seconds and fitted
 * with fit_decay against the post-train equilibrium.
 */
inline std::vector<DecayPoint> decay_sweep(const Memristor &proto, std::span<const double> t_ints, Rng &rng,
                                           const DecaySweepOptions &opt = {})
{
	detail::require(!t_ints.empty(), "decay_sweep: no intervals given");
	std::vector<DecayPoint> out;
	for (double t_int : t_ints) {
		Memristor dev = proto;
		DecayPoint pt;
		pt.t_int = t_int;
		const double t0 = dev.time();
		pt.g0 = dev.conductance_at(t0);
		const PulseTrain train{opt.n_pulses, opt.v, opt.w, t_int};
		for (const auto &p : train.pulses(t0)) dev.pulse(p, rng);
		const double t_end = t0 + (opt.n_pulses - 1) * t_int;
		pt.g_peak = dev.conductance();
		pt.g_eq = dev.state().g_eq;
		std::vector<double> ts, gs;
		const auto n = static_cast<std::size_t>(std::floor(opt.window / opt.sample_dt + 1e-9));
		for (std::size_t k = 1; k <= n; ++k) {
			const double dt = static_cast<double>(k) * opt.sample_dt;
			const double g = dev.conductance_at(t_end + dt);
			pt.relaxation.push_back({dt, g});
			ts.push_back(dt);
			gs.push_back(g);
		}
		try {
			pt.fit = fitting::fit_decay(ts, gs, pt.g_eq);
		} catch (const fit_error &e) {
			pt.error = e.what();
		}
		const double offset = std::max(std::abs(pt.g_peak - pt.g0), pt.g0 * opt.recovery_tol);
		for (double c : opt.recovery_checkpoints) {
			const double g = dev.conductance_at(t_end + c);
			pt.recovery.push_back({c, g});
			if (!pt.recovered_at && std::abs(g - pt.g0) <= opt.recovery_tol * offset) pt.recovered_at = c;
		}
		out.push_back(std::move(pt));
	}
	return out;
}

struct AmplitudeResponse {
	double v = 0.0;
	double g_pre = 0.0;
	double jump = 0.0;
	double dg_norm = 0.0; // (G after - G before) / G before
};

// One pulse per amplitude, each on a fresh copy of `proto`.
inline std::vector<AmplitudeResponse> amplitude_sweep(const Memristor &proto, std::span<const double> amplitudes,
                                                      Rng &rng, double w = 10e-6)
{
	std::vector<AmplitudeResponse> out;
	for (double v : amplitudes) {
		Memristor dev = proto;
		AmplitudeResponse r;
		r.v = v;
		const double t = dev.time();
		r.g_pre = dev.conductance_at(t);
		r.jump = dev.pulse({t, v, w}, rng).jump;
		r.dg_norm = (dev.conductance() - r.g_pre) / r.g_pre;
		out.push_back(r);
	}
	return out;
}

} // namespace memstp::protocols
