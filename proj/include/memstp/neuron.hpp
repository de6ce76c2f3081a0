#pragma once

/*
 * Exponential integrate-and-fire membrane
 *
 *   c_m dv/dt = -g_l (v - e_l) + g_l delta_t exp((v - v_t) / delta_t) + i_in
 *
 * integrated with fixed explicit Euler steps. Crossing v_peak emits a spike,
 * resets to v_reset and clamps the membrane there for t_ref. delta_t = 0
 * drops the exponential term (leaky IF).
 */

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <memstp/error.hpp>

namespace memstp::neuron {

// Defaults sit 60 mV above the standing level of the sequence detector.
struct NeuronParams {
	double c_m     = 25e-9;  // F
	double g_l     = 0.5e-6; // S, tau_m = 50 ms
	double e_l     = 0.0;    // V
	double v_t     = 3.0315; // V
	double delta_t = 0.005;  // V
	double v_peak  = 3.1315; // V
	double v_reset = 2.971;  // V
	double t_ref   = 0.005;  // s

	double tau_m() const { return c_m / g_l; }

	void validate() const
	{
		detail::require(c_m > 0 && g_l > 0, "neuron: c_m and g_l must be > 0");
		detail::require(v_reset < v_peak, "neuron: need v_reset < v_peak");
		detail::require(delta_t >= 0 && t_ref >= 0, "neuron: need delta_t >= 0, t_ref >= 0");
	}
};

struct NeuronState {
	double v_m = 0.0;
	double t   = 0.0;
	std::optional<double> t_last_spike;
};

inline NeuronState rest_state(const NeuronParams &p) { return {p.e_l, 0.0, std::nullopt}; }

struct StepResult {
	NeuronState state;
	bool spiked = false;
};

inline void check_step(const NeuronParams &p, double dt)
{
	detail::require(dt > 0, "neuron: dt must be > 0");
	detail::require(dt <= p.tau_m() / 10.0, "neuron: dt exceeds tau_m / 10");
}

// One Euler step without the stability check; callers validate dt once.
inline StepResult step_unchecked(NeuronState s, const NeuronParams &p, double i_in, double dt)
{
	const double t_next = s.t + dt;
	if (s.t_last_spike && s.t < *s.t_last_spike + p.t_ref) {
		s.v_m = p.v_reset;
		s.t = t_next;
		return {s, false};
	}
	double dv = -p.g_l * (s.v_m - p.e_l) + i_in;
	if (p.delta_t > 0) {
		// cap the exponent; anything this large is past v_peak within one step
		const double z = std::min((s.v_m - p.v_t) / p.delta_t, 50.0);
		dv += p.g_l * p.delta_t * std::exp(z);
	}
	s.v_m += dt / p.c_m * dv;
	s.t = t_next;
	if (s.v_m >= p.v_peak) {
		s.v_m = p.v_reset;
		s.t_last_spike = t_next;
		return {s, true};
	}
	return {s, false};
}

inline StepResult step(const NeuronState &s, const NeuronParams &p, double i_in, double dt)
{
	check_step(p, dt);
	return step_unchecked(s, p, i_in, dt);
}

struct MembraneTrace {
	std::vector<double> t;
	std::vector<double> v;
	std::vector<double> spikes;
};

// Sample k of `current` drives the step from t = k*dt to (k+1)*dt.
inline MembraneTrace run_trace(const NeuronParams &p, std::span<const double> current, double dt)
{
	p.validate();
	check_step(p, dt);
	MembraneTrace tr;
	tr.t.reserve(current.size() + 1);
	tr.v.reserve(current.size() + 1);
	NeuronState s = rest_state(p);
	tr.t.push_back(s.t);
	tr.v.push_back(s.v_m);
	for (std::size_t k = 0; k < current.size(); ++k) {
		auto r = step_unchecked(s, p, current[k], dt);
		s = r.state;
		// keep the time base exact instead of accumulating dt
		s.t = static_cast<double>(k + 1) * dt;
		if (r.spiked) {
			s.t_last_spike = s.t;
			tr.spikes.push_back(s.t);
		}
		tr.t.push_back(s.t);
		tr.v.push_back(s.v_m);
	}
	return tr;
}

inline double psc_from_conductance(double g, double v_read) { return g * v_read; }

} // namespace memstp::neuron
