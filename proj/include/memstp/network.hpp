#pragma once

/*
 * Two-input detector circuits: synapses (static resistor, RC element or
 * volatile memristor) converging on one exponential IF neuron.
 *
 * Synaptic currents into the membrane:
 *   static      g_s * |v| while one of its pulses is on
 *   RC          g_rc * read_v, plus the pulse current g_rc * |v| low-pass
 *               filtered with time constant R * C
 *   memristive  G(t) * read_v continuously, plus G * |v| during its own write
 *               pulses when write_transient is set
 *
 * Pulses shorter than the integration step deposit their charge into the
 * step they overlap. The optional membrane noise is an Ornstein-Uhlenbeck
 * voltage fluctuation of stationary standard deviation noise_v.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <memstp/device.hpp>
#include <memstp/error.hpp>
#include <memstp/neuron.hpp>
#include <memstp/protocols.hpp>
#include <memstp/rng.hpp>

namespace memstp::network {

using device::EventLabel;
using protocols::PulseTrain;

enum class Topology { SequenceDetector, ControlRC, CoincidenceDetector };

inline Topology topology_from_string(std::string_view s)
{
	if (s == "sequence_detector" || s == "sequence") return Topology::SequenceDetector;
	if (s == "control_rc" || s == "control") return Topology::ControlRC;
	if (s == "coincidence_detector" || s == "coincidence") return Topology::CoincidenceDetector;
	throw config_error("unknown topology '" + std::string(s) + "'");
}

inline std::string_view to_string(Topology t)
{
	switch (t) {
	case Topology::SequenceDetector:    return "sequence_detector";
	case Topology::ControlRC:           return "control_rc";
	case Topology::CoincidenceDetector: return "coincidence_detector";
	}
	return "sequence_detector";
}

struct StaticSynapse {
	double resistance;
};

struct RCSynapse {
	double resistance;
	double capacitance;
};

struct MemristiveSynapse {
	device::DeviceParams params;
	device::ModePolicy policy = device::ModePolicy::Stochastic;
};

struct Synapse {
	std::variant<StaticSynapse, RCSynapse, MemristiveSynapse> kind;
	double read_v = 0.0;

	bool memristive() const { return std::holds_alternative<MemristiveSynapse>(kind); }
};

/*
 * Everything needed to build any of the three circuits. The defaults are the
 * calibrated sequence-detector operating point; see presets in config.hpp.
 */
// Detector device: g_eq0 placed where P(Saturating) = 0.325.
inline device::DeviceParams detector_device()
{
	device::DeviceParams p;
	p.g_eq0 = p.g_c + p.sigma_s * std::log(0.325 / 0.675);
	return p;
}

struct NetworkConfig {
	neuron::NeuronParams neuron;
	device::DeviceParams device = detector_device();
	device::ModePolicy mode_policy = device::ModePolicy::Stochastic;
	double r_static = 32e3;     // ohm
	double rc_r = 0.0;          // ohm, 0 selects 1 / device.g_eq0
	double rc_c = 0.0;          // farad, 0 selects R * C = tau_d_base
	double read_v = 0.5;        // standing read bias of memristive and RC synapses
	double noise_v = 0.0;       // membrane noise (V, stationary std)
	bool write_transient = true;
	double recovery = 10.0;     // relaxation before each trial (s)
	double tail = 0.5;          // simulated time after the last pulse (s)
	double dt = 1e-4;
};

struct Network {
	Topology topology = Topology::SequenceDetector;
	// synapses[0] receives train A, synapses[1] train B
	std::vector<Synapse> synapses;
	neuron::NeuronParams neuron;
	double noise_v = 0.0;
	bool write_transient = true;
	double recovery = 10.0;
	double tail = 0.5;
	double dt = 1e-4;

	std::size_t neuron_count() const { return 1; }
};

inline Network build_detector(Topology topo, const NetworkConfig &cfg)
{
	cfg.neuron.validate();
	cfg.device.validate();
	detail::require(cfg.r_static > 0, "network: static resistance must be > 0");
	Network net;
	net.topology = topo;
	net.neuron = cfg.neuron;
	net.noise_v = cfg.noise_v;
	net.write_transient = cfg.write_transient;
	net.recovery = cfg.recovery;
	net.tail = cfg.tail;
	net.dt = cfg.dt;
	const Synapse stat{StaticSynapse{cfg.r_static}, 0.0};
	const Synapse mem{MemristiveSynapse{cfg.device, cfg.mode_policy}, cfg.read_v};
	switch (topo) {
	case Topology::SequenceDetector:
		net.synapses = {stat, mem};
		break;
	case Topology::ControlRC: {
		const double r = cfg.rc_r > 0 ? cfg.rc_r : 1.0 / cfg.device.g_eq0;
		const double c = cfg.rc_c > 0 ? cfg.rc_c : cfg.device.tau_d_base / r;
		net.synapses = {stat, Synapse{RCSynapse{r, c}, cfg.read_v}};
		break;
	}
	case Topology::CoincidenceDetector:
		net.synapses = {mem, mem};
		break;
	}
	return net;
}

inline Network build_detector(std::string_view name, const NetworkConfig &cfg)
{
	return build_detector(topology_from_string(name), cfg);
}

enum class Order { AB, BA };

inline std::string_view to_string(Order o) { return o == Order::AB ? "AB" : "BA"; }

struct PatternSpec {
	Order order = Order::AB;
	PulseTrain train{3, -4.0, 10e-6, 0.25};
	// end of the first train to the start of the second; negative selects the default t_int
	double gap = -1.0;
	// both trains start together (coincidence stimulus); gap and order are ignored
	bool simultaneous = false;

	double resolved_gap() const { return gap >= 0 ? gap : train.t_int; }
};

struct TrialRecord {
	Order order = Order::AB;
	bool simultaneous = false;
	bool spiked = false;
	std::vector<double> spike_times;
	// one label per memristive synapse, from its g0 and its conductance 10 ms after its last pulse
	std::vector<EventLabel> labels;
	// shared time base, filled only when traces are requested
	std::vector<double> t;
	std::vector<double> vmem;
	std::vector<double> conductance; // first memristive synapse, or 0
	std::vector<double> current;

	std::optional<EventLabel> label() const
	{
		if (labels.empty()) return std::nullopt;
		return labels.front();
	}
};

namespace geometry {

// Overlap of [a0, a1) and [b0, b1).
inline double overlap(double a0, double a1, double b0, double b1)
{
	return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

} // namespace geometry

/*
 * Train onsets of one trial, relative to the pattern start. For AB the A
 * input (synapse 0) gets the first train.
 */
inline std::array<double, 2> train_onsets(const PatternSpec &pat)
{
	if (pat.simultaneous) return {0.0, 0.0};
	const double second = pat.train.duration() + pat.resolved_gap();
	return pat.order == Order::AB ? std::array<double, 2>{0.0, second} : std::array<double, 2>{second, 0.0};
}

inline TrialRecord run_trial(const Network &net, const PatternSpec &pat, Rng &rng, double dt, bool keep_traces = false)
{
	neuron::check_step(net.neuron, dt);
	pat.train.validate();
	detail::require(net.synapses.size() == 2, "network: detector needs exactly two synapses");

	const double t_base = net.recovery;
	const auto onset = train_onsets(pat);
	std::array<std::vector<device::Pulse>, 2> pulses;
	for (int s = 0; s < 2; ++s) pulses[s] = pat.train.pulses(t_base + onset[s]);
	const double t_last_pulse = t_base + std::max(onset[0], onset[1]) + pat.train.duration();
	const double t_end = t_last_pulse + net.tail;
	const auto n_steps = static_cast<std::size_t>(std::ceil((t_end - t_base) / dt - 1e-9));

	// per-synapse dynamic state
	std::array<std::optional<device::Memristor>, 2> mem;
	std::array<double, 2> rc_current{0.0, 0.0};
	std::array<std::size_t, 2> next_pulse{0, 0};
	std::array<double, 2> g_pre{0.0, 0.0};
	std::array<std::optional<double>, 2> g_post;
	for (int s = 0; s < 2; ++s) {
		if (const auto *m = std::get_if<MemristiveSynapse>(&net.synapses[s].kind)) {
			mem[s].emplace(m->params, m->policy, 0.0);
			mem[s]->relax_to(t_base);
		}
	}
	constexpr double label_delay = 0.01;

	TrialRecord rec;
	rec.order = pat.order;
	rec.simultaneous = pat.simultaneous;
	const double tau_m = net.neuron.tau_m();
	const double noise_gain = net.neuron.g_l * net.noise_v * std::sqrt(2.0 * tau_m / dt);
	// the membrane has settled on the standing read current during recovery
	double standing = 0.0;
	for (int s = 0; s < 2; ++s) {
		const Synapse &syn = net.synapses[s];
		if (mem[s]) standing += mem[s]->conductance() * syn.read_v;
		else if (const auto *rc = std::get_if<RCSynapse>(&syn.kind)) standing += syn.read_v / rc->resistance;
	}
	neuron::NeuronState ns = neuron::rest_state(net.neuron);
	ns.v_m = net.neuron.e_l + standing / net.neuron.g_l;
	ns.t = t_base;

	int first_mem = mem[0] ? 0 : (mem[1] ? 1 : -1);
	if (keep_traces) {
		rec.t.reserve(n_steps);
		rec.vmem.reserve(n_steps);
		rec.conductance.reserve(n_steps);
		rec.current.reserve(n_steps);
	}

	for (std::size_t k = 0; k < n_steps; ++k) {
		const double t0 = t_base + static_cast<double>(k) * dt;
		const double t1 = t0 + dt;
		double current = 0.0;
		for (int s = 0; s < 2; ++s) {
			const Synapse &syn = net.synapses[s];
			const auto &ps = pulses[s];
			// time this synapse's pulses are on within [t0, t1)
			double pulse_time = 0.0;
			for (const auto &p : ps) pulse_time += geometry::overlap(t0, t1, p.t, p.t + p.w);
			const double v_abs = std::abs(pat.train.v);

			if (const auto *st = std::get_if<StaticSynapse>(&syn.kind)) {
				current += v_abs * pulse_time / (st->resistance * dt);
			} else if (const auto *rc = std::get_if<RCSynapse>(&syn.kind)) {
				const double g = 1.0 / rc->resistance;
				const double drive = g * v_abs * pulse_time / dt;
				const double decay = std::exp(-dt / (rc->resistance * rc->capacitance));
				rc_current[s] = drive + (rc_current[s] - drive) * decay;
				current += g * syn.read_v + rc_current[s];
			} else {
				auto &m = *mem[s];
				m.relax_to(t0);
				const double g = m.conductance();
				current += g * syn.read_v;
				if (net.write_transient) current += g * v_abs * pulse_time / dt;
				if (!g_post[s] && next_pulse[s] == ps.size() && t0 >= ps.back().t + label_delay) g_post[s] = g;
			}
			// writes land after this step's current is taken
			while (next_pulse[s] < ps.size() && ps[next_pulse[s]].t < t1) {
				const auto &p = ps[next_pulse[s]];
				if (mem[s]) {
					if (next_pulse[s] == 0) g_pre[s] = mem[s]->conductance_at(p.t);
					mem[s]->pulse(p, rng);
				}
				++next_pulse[s];
			}
		}
		if (noise_gain > 0) current += noise_gain * rng.normal();

		auto r = neuron::step_unchecked(ns, net.neuron, current, dt);
		ns = r.state;
		ns.t = t1;
		if (r.spiked) {
			ns.t_last_spike = t1;
			rec.spike_times.push_back(t1 - t_base);
		}
		if (keep_traces) {
			rec.t.push_back(t1 - t_base);
			rec.vmem.push_back(ns.v_m);
			rec.conductance.push_back(first_mem >= 0 ? mem[first_mem]->conductance() : 0.0);
			rec.current.push_back(current);
		}
	}
	for (int s = 0; s < 2; ++s) {
		if (!mem[s]) continue;
		const double gp = g_post[s] ? *g_post[s] : mem[s]->conductance_at(std::max(mem[s]->time(), pulses[s].back().t + label_delay));
		rec.labels.push_back(device::classify_event(g_pre[s], gp));
	}
	rec.spiked = !rec.spike_times.empty();
	return rec;
}

inline TrialRecord run_trial(const Network &net, const PatternSpec &pat, Rng &rng, bool keep_traces = false)
{
	return run_trial(net, pat, rng, net.dt, keep_traces);
}

struct MonteCarloResult {
	double p_spike = 0.0;
	int spikes = 0;
	std::vector<TrialRecord> trials;
};

// Seed of trial i: derive_seed(derive_seed(seed, stream), i), stream 0 = AB, 1 = BA, 2 = simultaneous.
inline std::uint64_t trial_seed(std::uint64_t seed, const PatternSpec &pat, std::size_t i)
{
	const std::uint64_t stream = pat.simultaneous ? 2 : (pat.order == Order::AB ? 0 : 1);
	return derive_seed(derive_seed(seed, stream), i);
}

/*
 * Independent trials: each starts from a fresh copy of the network, relaxes
 * for net.recovery and then receives the pattern. Trials are distributed
 * over `threads` workers; the result does not depend on the thread count.
 */
inline MonteCarloResult monte_carlo(const Network &net, const PatternSpec &pat, int trials, std::uint64_t seed,
                                    int threads = 1, int keep_traces_for = 0)
{
	detail::require(trials >= 1, "monte_carlo: need trials >= 1");
	MonteCarloResult res;
	res.trials.resize(static_cast<std::size_t>(trials));
	std::exception_ptr failure;
	std::mutex failure_mutex;
	auto work = [&](std::size_t begin, std::size_t stride) {
		try {
			for (std::size_t i = begin; i < res.trials.size(); i += stride) {
				Rng rng(trial_seed(seed, pat, i));
				res.trials[i] = run_trial(net, pat, rng, net.dt, static_cast<int>(i) < keep_traces_for);
			}
		} catch (...) {
			std::lock_guard lock(failure_mutex);
			if (!failure) failure = std::current_exception();
		}
	};
	const auto n_threads = static_cast<std::size_t>(std::clamp(threads, 1, trials));
	if (n_threads == 1) {
		work(0, 1);
	} else {
		std::vector<std::jthread> pool;
		for (std::size_t w = 0; w < n_threads; ++w) pool.emplace_back(work, w, n_threads);
	}
	if (failure) std::rethrow_exception(failure);
	for (const auto &t : res.trials) res.spikes += t.spiked ? 1 : 0;
	res.p_spike = static_cast<double>(res.spikes) / trials;
	return res;
}

} // namespace memstp::network
