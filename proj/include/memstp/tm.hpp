#pragma once

// Tsodyks-Markram short-term plasticity with utilization u and resources x.

#include <cmath>
#include <span>
#include <vector>

#include <memstp/error.hpp>

namespace memstp::tm {

struct TMParams {
	double a       = 1.0;  // peak scale
	double u_cap   = 0.1;  // utilization increment U
	double tau_rec = 0.02; // resource recovery (s)
	double tau_f   = 0.5;  // facilitation decay (s)

	void validate() const
	{
		detail::require(a > 0, "tm: a must be > 0");
		detail::require(u_cap >= 0 && u_cap <= 1, "tm: u_cap must lie in [0, 1]");
		detail::require(tau_rec > 0 && tau_f > 0, "tm: time constants must be > 0");
	}
};

/*
 * Facilitation-only reduction: resources recover instantly, so x = 1 at
 * every spike and peaks are a * u+.
 */
inline TMParams facilitation_only(double a, double u_cap, double tau_f)
{
	return {a, u_cap, 1e-9, tau_f};
}

struct TMState {
	double u = 0.0;
	double x = 1.0;
	double t_last = 0.0;
};

inline TMState advance(TMState s, double dt, const TMParams &p)
{
	detail::require(dt >= 0, "tm: advance with negative dt");
	if (dt == 0.0) return s;
	s.u *= std::exp(-dt / p.tau_f);
	s.x = 1.0 - (1.0 - s.x) * std::exp(-dt / p.tau_rec);
	s.t_last += dt;
	return s;
}

struct SpikeResponse {
	TMState state;
	double peak;
};

inline SpikeResponse on_spike(TMState s, const TMParams &p)
{
	const double u_plus = s.u + p.u_cap * (1.0 - s.u);
	const double peak = p.a * u_plus * s.x;
	s.x *= 1.0 - u_plus;
	s.u = u_plus;
	return {s, peak};
}

inline void check_increasing(std::span<const double> t)
{
	for (std::size_t k = 1; k < t.size(); ++k)
		if (!(t[k] > t[k - 1])) throw contract_error("tm: spike times must be strictly increasing");
}

// Closed-form peaks for a train starting from rest.
inline std::vector<double> peaks_for_train(const TMParams &p, std::span<const double> spike_times)
{
	check_increasing(spike_times);
	std::vector<double> peaks;
	peaks.reserve(spike_times.size());
	TMState s;
	if (!spike_times.empty()) s.t_last = spike_times.front();
	for (double t : spike_times) {
		s = advance(s, t - s.t_last, p);
		auto r = on_spike(s, p);
		s = r.state;
		peaks.push_back(r.peak);
	}
	return peaks;
}

/*
 * Reference solution: classical RK4 on du/dt = -u/tau_f, dx/dt = (1-x)/tau_rec
 * between spikes, with the last step of each interval shortened so it lands
 * on the spike time. Meant as an oracle for peaks_for_train.
 */
inline std::vector<double> integrate_reference(const TMParams &p, std::span<const double> spike_times, double dt)
{
	detail::require(dt > 0, "tm: integration step must be > 0");
	check_increasing(spike_times);

	auto rhs = [&p](double u, double x, double &du, double &dx) {
		du = -u / p.tau_f;
		dx = (1.0 - x) / p.tau_rec;
	};

	std::vector<double> peaks;
	peaks.reserve(spike_times.size());
	double u = 0.0, x = 1.0;
	for (std::size_t k = 0; k < spike_times.size(); ++k) {
		if (k > 0) {
			double remaining = spike_times[k] - spike_times[k - 1];
			while (remaining > 0) {
				const double h = std::min(dt, remaining);
				double ku1, kx1, ku2, kx2, ku3, kx3, ku4, kx4;
				rhs(u, x, ku1, kx1);
				rhs(u + 0.5 * h * ku1, x + 0.5 * h * kx1, ku2, kx2);
				rhs(u + 0.5 * h * ku2, x + 0.5 * h * kx2, ku3, kx3);
				rhs(u + h * ku3, x + h * kx3, ku4, kx4);
				u += h / 6.0 * (ku1 + 2 * ku2 + 2 * ku3 + ku4);
				x += h / 6.0 * (kx1 + 2 * kx2 + 2 * kx3 + kx4);
				remaining -= h;
				if (remaining < 1e-15 * dt) remaining = 0.0;
			}
		}
		const double u_plus = u + p.u_cap * (1.0 - u);
		peaks.push_back(p.a * u_plus * x);
		x *= 1.0 - u_plus;
		u = u_plus;
	}
	return peaks;
}

} // namespace memstp::tm
