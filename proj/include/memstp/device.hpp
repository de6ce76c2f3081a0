#pragma once

/*
 * Phenomenological model of a volatile TiO2 memristor.
 *
 * The conductance seen at the terminals is G = g_eq + delta_g, where g_eq is
 * the long-term (non-volatile) equilibrium and delta_g a volatile offset that
 * relaxes back to zero. Supra-threshold pulses raise delta_g through a pair
 * of utilization/resource variables (u, x) with the same kinetics as a
 * Tsodyks-Markram synapse. Every pulse also deposits Joule energy into a
 * leaky accumulator; once the accumulated energy crosses a state dependent
 * barrier the device takes a non-volatile step of g_eq.
 *
 * Each stimulus train runs in one of two modes, drawn at train onset:
 *
 *   Facilitating  peaks rise from pulse to pulse (STP-F)
 *   Saturating    each pulse additionally pulls g_eq towards g_floor, so the
 *                 later peaks end up below the first one (STP-S)
 *
 * The free functions are pure (state in, state out). Memristor bundles
 * parameters, state and the mode-drawing policy for drivers.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <memstp/error.hpp>
#include <memstp/rng.hpp>

namespace memstp::device {

enum class Mode { Facilitating, Saturating };

// Label of a whole stimulus event, decided from the observable conductance.
enum class EventLabel { STP_F, STP_S };

// How Memristor picks the mode at the onset of each train.
enum class ModePolicy { Stochastic, Facilitating, Saturating };

inline std::string_view to_string(EventLabel l) { return l == EventLabel::STP_F ? "STP_F" : "STP_S"; }
inline std::string_view to_string(Mode m) { return m == Mode::Facilitating ? "facilitating" : "saturating"; }

inline std::string_view to_string(ModePolicy p)
{
	switch (p) {
	case ModePolicy::Stochastic:   return "stochastic";
	case ModePolicy::Facilitating: return "facilitating";
	case ModePolicy::Saturating:   return "saturating";
	}
	return "stochastic";
}

inline ModePolicy mode_policy_from_string(std::string_view s)
{
	if (s == "stochastic")   return ModePolicy::Stochastic;
	if (s == "facilitating") return ModePolicy::Facilitating;
	if (s == "saturating")   return ModePolicy::Saturating;
	throw config_error("unknown mode policy '" + std::string(s) + "'");
}

// Point of the optional tau_d(interval) lookup table.
struct RateAnchor {
	double interval;
	double tau_d;
};

struct DeviceParams {
	// conductance window and initial equilibrium (S)
	double g_min = 2.5e-6;
	double g_max = 3.4e-6;
	double g_eq0 = 2.9e-6;

	// amplitude response: s(v) = c_amp * (exp((|v| - v_th) / v0) - 1)
	double v_th  = 1.0;
	double v0    = 1.5;
	double c_amp = 0.05;

	// utilization increment and (u, x) time constants
	double u_dev       = 0.2;
	double tau_f_dev   = 1.0;
	double tau_rec_dev = 0.02;

	// tau_d = clamp(tau_d_base * (dt_ref / interval)^gamma, tau_d_min, tau_d_max)
	double tau_d_base = 0.5;
	double gamma      = 0.5;
	double tau_d_min  = 0.05;
	double tau_d_max  = 5.0;
	double dt_ref     = 0.1;
	std::vector<RateAnchor> tau_d_anchors; // when non-empty, replaces the power law

	// saturating mode: per pulse g_eq -= kappa_sat * (g_eq - g_floor)
	double kappa_sat = 0.3;
	double g_floor   = 2.7e-6;

	// P(Saturating | g0) = 1 / (1 + exp(-(g0 - g_c) / sigma_s))
	double g_c     = 2.98e-6;
	double sigma_s = 0.012e-6;

	// barrier E_i(g_eq) = e0 * (1 + beta * (g_eq - g_min) / (g_max - g_min))
	double e0      = 1.3e-9;
	double beta    = 0.5;
	double tau_acc = 60.0;
	double dg_nv   = 0.06e-6;

	// a write pulse arriving at least this long after the previous one starts a new train
	double t_rec_min = 1.0;

	// positive pulses step g_eq down, negative ones up; otherwise every step is up
	bool polarity_sensitive = false;

	void validate() const;
};

struct DeviceState {
	double g_eq    = 0.0;
	double u       = 0.0;
	double x       = 1.0;
	double delta_g = 0.0;
	double tau_d   = 0.0;
	double acc     = 0.0;
	Mode mode      = Mode::Facilitating;
	double t_last       = 0.0;
	double t_last_pulse = -std::numeric_limits<double>::infinity();

	double conductance() const { return g_eq + delta_g; }
};

struct Pulse {
	double t; // onset (s)
	double v; // amplitude (V), signed
	double w; // width (s)
};

inline void DeviceParams::validate() const
{
	using detail::require;
	require(g_min > 0 && g_min <= g_eq0 && g_eq0 <= g_max, "device: need 0 < g_min <= g_eq0 <= g_max");
	require(g_min < g_max, "device: need g_min < g_max");
	require(tau_f_dev > 0 && tau_rec_dev > 0 && tau_acc > 0, "device: time constants must be > 0");
	require(tau_d_base > 0 && tau_d_min > 0 && tau_d_min <= tau_d_max && dt_ref > 0,
	        "device: need 0 < tau_d_min <= tau_d_max, tau_d_base > 0, dt_ref > 0");
	require(u_dev > 0 && u_dev <= 1, "device: u_dev must lie in (0, 1]");
	require(kappa_sat >= 0 && kappa_sat < 1, "device: kappa_sat must lie in [0, 1)");
	require(sigma_s > 0, "device: sigma_s must be > 0");
	require(v_th >= 0 && v0 > 0 && c_amp >= 0, "device: need v_th >= 0, v0 > 0, c_amp >= 0");
	require(g_floor >= g_min && g_floor <= g_max, "device: g_floor must lie in [g_min, g_max]");
	require(e0 > 0 && beta >= 0 && dg_nv >= 0, "device: need e0 > 0, beta >= 0, dg_nv >= 0");
	require(gamma >= 0 && t_rec_min >= 0, "device: need gamma >= 0, t_rec_min >= 0");
	for (std::size_t i = 0; i < tau_d_anchors.size(); ++i) {
		require(tau_d_anchors[i].interval > 0 && tau_d_anchors[i].tau_d > 0, "device: anchors must be positive");
		if (i > 0)
			require(tau_d_anchors[i].interval > tau_d_anchors[i - 1].interval,
			        "device: anchor intervals must be strictly increasing");
	}
}

// Decay time constant selected by an inter-pulse interval (may be +inf).
inline double decay_time_constant(const DeviceParams &p, double interval)
{
	double tau;
	if (!p.tau_d_anchors.empty()) {
		const auto &a = p.tau_d_anchors;
		if (interval <= a.front().interval) {
			tau = a.front().tau_d;
		} else if (interval >= a.back().interval) {
			tau = a.back().tau_d;
		} else {
			auto hi = std::upper_bound(a.begin(), a.end(), interval,
			                           [](double v, const RateAnchor &r) { return v < r.interval; });
			auto lo = hi - 1;
			// log-log interpolation
			const double f = (std::log(interval) - std::log(lo->interval)) /
			                 (std::log(hi->interval) - std::log(lo->interval));
			tau = std::exp(std::log(lo->tau_d) + f * (std::log(hi->tau_d) - std::log(lo->tau_d)));
		}
	} else {
		tau = p.tau_d_base * std::pow(p.dt_ref / interval, p.gamma);
	}
	return std::clamp(tau, p.tau_d_min, p.tau_d_max);
}

inline DeviceState rest_state(const DeviceParams &p, double t0 = 0.0)
{
	DeviceState s;
	s.g_eq = p.g_eq0;
	s.tau_d = std::clamp(p.tau_d_base, p.tau_d_min, p.tau_d_max);
	s.t_last = t0;
	return s;
}

// Free relaxation up to time t. g_eq is untouched.
inline DeviceState decay_to(DeviceState s, const DeviceParams &p, double t)
{
	if (t < s.t_last)
		throw contract_error("device: decay_to(" + std::to_string(t) + ") before last update at " +
		                     std::to_string(s.t_last));
	const double dt = t - s.t_last;
	if (dt == 0.0) return s;
	s.delta_g *= std::exp(-dt / s.tau_d);
	s.u *= std::exp(-dt / p.tau_f_dev);
	s.x = 1.0 - (1.0 - s.x) * std::exp(-dt / p.tau_rec_dev);
	s.acc *= std::exp(-dt / p.tau_acc);
	s.t_last = t;
	return s;
}

inline double pulse_energy(double g, double v, double w)
{
	detail::require(w > 0, "device: pulse width must be > 0");
	return g * v * v * w;
}

// Relative write strength of a pulse; zero at and below threshold.
inline double amplitude_gain(const DeviceParams &p, double v)
{
	const double a = std::abs(v);
	if (a <= p.v_th) return 0.0;
	return p.c_amp * std::expm1((a - p.v_th) / p.v0);
}

inline double barrier_energy(const DeviceParams &p, double g_eq)
{
	return p.e0 * (1.0 + p.beta * (g_eq - p.g_min) / (p.g_max - p.g_min));
}

struct PulseResponse {
	DeviceState state;
	double jump = 0.0;       // volatile conductance step (S)
	bool nonvolatile = false; // the barrier was crossed on this pulse
};

/*
 * One pulse. Sub-threshold pulses (reads) only deposit energy; they change
 * neither the volatile variables nor the rate-law bookkeeping, so a read
 * probe is non-perturbing apart from its (tiny) energy.
 */
inline PulseResponse apply_pulse(DeviceState s, const DeviceParams &p, const Pulse &pulse)
{
	detail::require(pulse.w > 0, "device: pulse width must be > 0");
	s = decay_to(s, p, pulse.t);

	PulseResponse r;
	if (std::abs(pulse.v) >= p.v_th) {
		s.tau_d = decay_time_constant(p, pulse.t - s.t_last_pulse);
		s.t_last_pulse = pulse.t;

		s.u += p.u_dev * (1.0 - s.u);
		const double headroom = p.g_max - s.g_eq - s.delta_g;
		double jump = headroom * amplitude_gain(p, pulse.v) * s.u * s.x;
		jump = std::clamp(jump, 0.0, std::max(headroom, 0.0));
		s.x *= 1.0 - s.u;
		s.delta_g += jump;
		r.jump = jump;

		if (s.mode == Mode::Saturating) {
			// below g_floor the pull is upwards and may eat into the headroom just filled
			s.g_eq -= p.kappa_sat * (s.g_eq - p.g_floor);
			s.delta_g = std::min(s.delta_g, p.g_max - s.g_eq);
		}
	}

	s.acc += pulse_energy(s.conductance(), pulse.v, pulse.w);
	// relative slack so that n pulses of E_i / n cross on pulse n despite round-off
	if (s.acc >= barrier_energy(p, s.g_eq) * (1.0 - 1e-12)) {
		const double step = (p.polarity_sensitive && pulse.v > 0) ? -p.dg_nv : p.dg_nv;
		s.g_eq = std::clamp(s.g_eq + step, p.g_min, p.g_max);
		s.delta_g = std::min(s.delta_g, p.g_max - s.g_eq);
		s.acc = 0.0;
		r.nonvolatile = true;
	}
	r.state = s;
	return r;
}

inline double saturation_probability(double g0, const DeviceParams &p)
{
	const double z = (g0 - p.g_c) / p.sigma_s;
	if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
	const double e = std::exp(z);
	return e / (1.0 + e);
}

inline Mode sample_mode(double g0, const DeviceParams &p, Rng &rng)
{
	return rng.bernoulli(saturation_probability(g0, p)) ? Mode::Saturating : Mode::Facilitating;
}

// Ties count as facilitation.
inline EventLabel classify_event(double g0, double g_post)
{
	return g0 > g_post ? EventLabel::STP_S : EventLabel::STP_F;
}

struct IvSample {
	double t;
	double v;
	double i;
};

/*
 * Drives the device with a uniformly sampled voltage waveform. Each sample is
 * applied as a pulse of width dt after the current i = G * v has been read.
 */
inline std::vector<IvSample> iv_sweep(DeviceState s, const DeviceParams &p,
                                      std::span<const double> waveform, double dt)
{
	detail::require(dt > 0, "iv_sweep: sample step must be > 0");
	std::vector<IvSample> out;
	out.reserve(waveform.size());
	const double t0 = s.t_last;
	for (std::size_t k = 0; k < waveform.size(); ++k) {
		const double t = t0 + static_cast<double>(k) * dt;
		s = decay_to(s, p, t);
		const double v = waveform[k];
		out.push_back({t, v, s.conductance() * v});
		s = apply_pulse(s, p, {t, v, dt}).state;
	}
	return out;
}

// Zero-mean triangular wave 0 -> +a -> 0 -> -a -> 0, `cycles` periods.
inline std::vector<double> triangular_wave(double amplitude, double period, double dt, int cycles = 1)
{
	detail::require(period > 0 && dt > 0 && cycles >= 1, "triangular_wave: bad arguments");
	const auto n = static_cast<std::size_t>(std::llround(period / dt)) * static_cast<std::size_t>(cycles);
	std::vector<double> v(n + 1);
	for (std::size_t k = 0; k <= n; ++k) {
		double ph = std::fmod(static_cast<double>(k) * dt / period, 1.0);
		if (k == n) ph = 0.0;
		double y;
		if (ph < 0.25)      y = 4 * ph;
		else if (ph < 0.75) y = 2 - 4 * ph;
		else                y = 4 * ph - 4;
		v[k] = amplitude * y;
	}
	// exact zeros at the quarter-period crossings
	const auto q = static_cast<std::size_t>(std::llround(period / dt / 2));
	for (std::size_t k = 0; k <= n; k += q) v[k] = 0.0;
	return v;
}

/*
 * Area enclosed by an I-V trace: the trace is cut into lobes of constant
 * voltage sign and |closed integral of i dv| is summed over lobes.
 */
inline double loop_area(std::span<const IvSample> trace)
{
	double total = 0.0;
	double lobe = 0.0;
	int sign = 0;
	for (std::size_t k = 1; k < trace.size(); ++k) {
		const auto &a = trace[k - 1];
		const auto &b = trace[k];
		const int sb = (b.v > 0) - (b.v < 0);
		const int sa = (a.v > 0) - (a.v < 0);
		const int seg = sa != 0 ? sa : sb;
		if (seg != 0 && seg != sign) {
			total += std::abs(lobe);
			lobe = 0.0;
			sign = seg;
		}
		lobe += 0.5 * (a.i + b.i) * (b.v - a.v);
	}
	return total + std::abs(lobe);
}

/*
 * Parameters, state and mode policy of one physical device. The mode is
 * drawn when a write pulse arrives after a quiescent gap of at least
 * t_rec_min, using the conductance just before that pulse.
 */
class Memristor {
public:
	explicit Memristor(DeviceParams params, ModePolicy policy = ModePolicy::Stochastic, double t0 = 0.0)
	    : params_(std::move(params)), policy_(policy)
	{
		params_.validate();
		state_ = rest_state(params_, t0);
	}

	const DeviceParams &params() const { return params_; }
	const DeviceState &state() const { return state_; }
	ModePolicy policy() const { return policy_; }
	double conductance() const { return state_.conductance(); }
	double time() const { return state_.t_last; }

	void set_state(const DeviceState &s) { state_ = s; }

	void relax_to(double t) { state_ = decay_to(state_, params_, t); }

	// Conductance at time t, without writing.
	double conductance_at(double t) const { return decay_to(state_, params_, t).conductance(); }

	bool starts_train(double t) const { return t - state_.t_last_pulse >= params_.t_rec_min; }

	PulseResponse pulse(const Pulse &p, Rng &rng)
	{
		if (std::abs(p.v) >= params_.v_th && starts_train(p.t)) {
			relax_to(p.t);
			state_.mode = draw_mode(state_.conductance(), rng);
		}
		auto r = apply_pulse(state_, params_, p);
		state_ = r.state;
		return r;
	}

	// Sub-threshold read probe; returns the conductance it sees.
	double read(double t, double v_read, double w)
	{
		detail::require(std::abs(v_read) < params_.v_th, "device: read amplitude must be below v_th");
		relax_to(t);
		const double g = state_.conductance();
		state_ = apply_pulse(state_, params_, {t, v_read, w}).state;
		return g;
	}

private:
	Mode draw_mode(double g0, Rng &rng) const
	{
		switch (policy_) {
		case ModePolicy::Facilitating: return Mode::Facilitating;
		case ModePolicy::Saturating:   return Mode::Saturating;
		case ModePolicy::Stochastic:   break;
		}
		return sample_mode(g0, params_, rng);
	}

	DeviceParams params_;
	ModePolicy policy_;
	DeviceState state_;
};

} // namespace memstp::device
