#pragma once

/*
 * Parameter estimation:
 *   minimize_simplex     bounded Nelder-Mead
 *   fit_decay            log-linear regression of an exponential relaxation
 *   fit_tm               Tsodyks-Markram parameters from a peak sequence
 *   fit_amplitude_curve  gain and scale of the exponential amplitude law
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <memstp/error.hpp>
#include <memstp/tm.hpp>

namespace memstp::fitting {

struct FitParam {
	std::string name;
	std::string unit;
	double value;
};

struct FitResult {
	std::vector<FitParam> params;
	double sse = 0.0;
	int iterations = 0;
	bool converged = false;
	// some parameter is unidentifiable or ended on a bound
	bool degenerate = false;

	double value(std::string_view name) const
	{
		for (const auto &p : params)
			if (p.name == name) return p.value;
		throw std::out_of_range("fit: no parameter '" + std::string(name) + "'");
	}

	std::vector<double> values() const
	{
		std::vector<double> v;
		for (const auto &p : params) v.push_back(p.value);
		return v;
	}
};

struct Bounds {
	std::vector<double> lo;
	std::vector<double> hi;
};

struct SimplexOptions {
	double x_tol = 1e-10;  // simplex diameter (max-norm distance to the best vertex)
	double f_tol = 1e-20;  // spread of objective values over the simplex
	int max_iter = 20000;
	double initial_step = 0.1; // relative to max(|x_i|, 1), or to the box width when bounded
	// called with (iteration, best objective) after every iteration
	std::function<void(int, double)> on_iteration;
};

using Objective = std::function<double(std::span<const double>)>;

namespace detail {

inline std::vector<double> clip(std::vector<double> x, const Bounds &b)
{
	for (std::size_t i = 0; i < x.size(); ++i) {
		if (!b.lo.empty()) x[i] = std::max(x[i], b.lo[i]);
		if (!b.hi.empty()) x[i] = std::min(x[i], b.hi[i]);
	}
	return x;
}

} // namespace detail

/*
 * Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
 * Trial points are clipped into the bounds before evaluation, so every
 * evaluated and returned point lies inside them.
 */
inline FitResult minimize_simplex(const Objective &f, std::vector<double> start, const Bounds &bounds = {},
                                  const SimplexOptions &opt = {})
{
	const std::size_t n = start.size();
	memstp::detail::require(n > 0, "simplex: empty start vector");
	memstp::detail::require((bounds.lo.empty() || bounds.lo.size() == n) && (bounds.hi.empty() || bounds.hi.size() == n),
	                        "simplex: bounds dimension mismatch");
	for (std::size_t i = 0; i < n; ++i) {
		if (!bounds.lo.empty()) memstp::detail::require(start[i] >= bounds.lo[i], "simplex: start below lower bound");
		if (!bounds.hi.empty()) memstp::detail::require(start[i] <= bounds.hi[i], "simplex: start above upper bound");
	}

	std::vector<std::vector<double>> x(n + 1, start);
	for (std::size_t i = 0; i < n; ++i) {
		double h = opt.initial_step * std::max(std::abs(start[i]), 1.0);
		if (!bounds.lo.empty() && !bounds.hi.empty())
			h = std::min(h, opt.initial_step * (bounds.hi[i] - bounds.lo[i]));
		if (h == 0.0) h = opt.initial_step;
		if (!bounds.hi.empty() && start[i] + h > bounds.hi[i]) h = -h;
		x[i + 1][i] += h;
		x[i + 1] = detail::clip(x[i + 1], bounds);
	}
	std::vector<double> fx(n + 1);
	for (std::size_t j = 0; j <= n; ++j) fx[j] = f(x[j]);

	std::vector<std::size_t> order(n + 1);
	auto sort_simplex = [&] {
		std::iota(order.begin(), order.end(), std::size_t{0});
		std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
		std::vector<std::vector<double>> xs(n + 1);
		std::vector<double> fs(n + 1);
		for (std::size_t k = 0; k <= n; ++k) {
			xs[k] = std::move(x[order[k]]);
			fs[k] = fx[order[k]];
		}
		x.swap(xs);
		fx.swap(fs);
	};
	auto along = [&](const std::vector<double> &c, const std::vector<double> &p, double s) {
		std::vector<double> r(n);
		for (std::size_t i = 0; i < n; ++i) r[i] = c[i] + s * (p[i] - c[i]);
		return detail::clip(std::move(r), bounds);
	};

	FitResult res;
	int iter = 0;
	for (;; ++iter) {
		sort_simplex();
		double diameter = 0.0;
		for (std::size_t j = 1; j <= n; ++j)
			for (std::size_t i = 0; i < n; ++i) diameter = std::max(diameter, std::abs(x[j][i] - x[0][i]));
		if (diameter < opt.x_tol || std::abs(fx[n] - fx[0]) < opt.f_tol) {
			res.converged = true;
			break;
		}
		if (iter >= opt.max_iter) break;

		std::vector<double> c(n, 0.0);
		for (std::size_t j = 0; j < n; ++j)
			for (std::size_t i = 0; i < n; ++i) c[i] += x[j][i] / static_cast<double>(n);

		auto xr = along(c, x[n], -1.0);
		const double fr = f(xr);
		if (fr < fx[0]) {
			auto xe = along(c, x[n], -2.0);
			const double fe = f(xe);
			if (fe < fr) { x[n] = std::move(xe); fx[n] = fe; }
			else         { x[n] = std::move(xr); fx[n] = fr; }
		} else if (fr < fx[n - 1]) {
			x[n] = std::move(xr);
			fx[n] = fr;
		} else {
			const bool outside = fr < fx[n];
			auto xc = outside ? along(c, xr, 0.5) : along(c, x[n], 0.5);
			const double fc = f(xc);
			if (fc < (outside ? fr : fx[n])) {
				x[n] = std::move(xc);
				fx[n] = fc;
			} else {
				for (std::size_t j = 1; j <= n; ++j) {
					x[j] = along(x[0], x[j], 0.5);
					fx[j] = f(x[j]);
				}
			}
		}
		if (opt.on_iteration) opt.on_iteration(iter, *std::min_element(fx.begin(), fx.end()));
	}

	const auto best = static_cast<std::size_t>(std::min_element(fx.begin(), fx.end()) - fx.begin());
	for (std::size_t i = 0; i < n; ++i) res.params.push_back({"p" + std::to_string(i), "", x[best][i]});
	res.sse = fx[best];
	res.iterations = iter;
	return res;
}

/*
 * Fits G(t) = g_eq + A exp(-t / tau_d) by least squares on ln(G - g_eq).
 * Samples with G <= g_eq carry no information about the exponent and are
 * skipped.
 */
inline FitResult fit_decay(std::span<const double> t, std::span<const double> g, double g_eq)
{
	memstp::detail::require(t.size() == g.size(), "fit_decay: time and conductance lengths differ");
	std::vector<double> ts, ys;
	for (std::size_t k = 0; k < t.size(); ++k) {
		const double r = g[k] - g_eq;
		if (r > 0 && std::isfinite(r)) {
			ts.push_back(t[k]);
			ys.push_back(std::log(r));
		}
	}
	if (ts.size() < 3)
		throw fit_error("fit_decay: " + std::to_string(ts.size()) + " usable samples above g_eq, need at least 3");

	const double nn = static_cast<double>(ts.size());
	const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / nn;
	const double ym = std::accumulate(ys.begin(), ys.end(), 0.0) / nn;
	double sxx = 0.0, sxy = 0.0;
	for (std::size_t k = 0; k < ts.size(); ++k) {
		sxx += (ts[k] - tm) * (ts[k] - tm);
		sxy += (ts[k] - tm) * (ys[k] - ym);
	}
	if (sxx <= 0) throw fit_error("fit_decay: all usable samples share one time stamp");
	const double slope = sxy / sxx;
	if (!(slope < 0)) throw fit_error("fit_decay: residual conductance does not decay");
	const double intercept = ym - slope * tm;

	FitResult res;
	const double tau = -1.0 / slope;
	const double amp = std::exp(intercept);
	res.params = {{"tau_d", "s", tau}, {"amplitude", "S", amp}};
	for (std::size_t k = 0; k < t.size(); ++k) {
		const double e = g[k] - g_eq - amp * std::exp(-t[k] / tau);
		res.sse += e * e;
	}
	res.converged = true;
	return res;
}

struct TMFitOptions {
	double tau_lo = 1e-3;
	double tau_hi = 100.0;
	// peak scale held fixed when set. From rest with equal spacing the peaks
	// only determine a * u_cap and (1 - u_cap) exp(-spacing / tau_f) (when x
	// recovers fully), so a free scale leaves u_cap and tau_f unidentifiable.
	std::optional<double> a;
	SimplexOptions simplex{1e-10, 1e-24, 20000, 0.1, {}};
};

/*
 * Least-squares TM fit. Peaks are normalized by their maximum m, time
 * constants are searched in log space, and the optimizer runs from the
 * 8 corners of
 *
 *   u_cap in {0.1, 0.5}, tau_f in {50 ms, 1 s}, tau_rec in {20 ms, 1 s}
 *
 * with a (unless fixed) chosen so that the first model peak matches the
 * first data peak. The best run wins. It is flagged degenerate when a
 * parameter sits on a bound, when moving one parameter alone leaves the sse
 * flat, or when a is free and the spikes are equally spaced.
 */
inline FitResult fit_tm(std::span<const double> peaks, std::span<const double> spike_times, const TMFitOptions &opt = {})
{
	if (peaks.size() != spike_times.size() || peaks.size() < 2)
		throw fit_error("fit_tm: need at least 2 peaks with matching spike times");
	tm::check_increasing(spike_times);
	if (opt.a) memstp::detail::require(*opt.a > 0, "fit_tm: fixed a must be > 0");
	const double m = *std::max_element(peaks.begin(), peaks.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
	if (!(std::abs(m) > 0)) throw fit_error("fit_tm: all peaks are zero");
	const double scale = std::abs(m);
	std::vector<double> y(peaks.begin(), peaks.end());
	for (double &v : y) v /= scale;
	const std::vector<double> ts(spike_times.begin(), spike_times.end());

	const double la = 1e-3, ha = 1e6;
	const double lt = std::log(opt.tau_lo), ht = std::log(opt.tau_hi);
	// q = (a, u_cap, ln tau_rec, ln tau_f), or without a when it is fixed
	const std::size_t off = opt.a ? 0 : 1;
	Bounds bounds{{0.0, lt, lt}, {1.0, ht, ht}};
	if (!opt.a) {
		bounds.lo.insert(bounds.lo.begin(), la);
		bounds.hi.insert(bounds.hi.begin(), ha);
	}

	auto to_params = [&](std::span<const double> q) {
		tm::TMParams p;
		p.a = opt.a ? *opt.a / scale : q[0];
		p.u_cap = q[off];
		p.tau_rec = std::clamp(std::exp(q[off + 1]), opt.tau_lo, opt.tau_hi);
		p.tau_f = std::clamp(std::exp(q[off + 2]), opt.tau_lo, opt.tau_hi);
		return p;
	};
	auto objective = [&](std::span<const double> q) {
		const auto model = tm::peaks_for_train(to_params(q), ts);
		double s = 0.0;
		for (std::size_t k = 0; k < y.size(); ++k) s += (y[k] - model[k]) * (y[k] - model[k]);
		return s;
	};

	FitResult best;
	best.sse = std::numeric_limits<double>::infinity();
	int total_iter = 0;
	for (double u0 : {0.1, 0.5})
		for (double tf0 : {0.05, 1.0})
			for (double tr0 : {0.02, 1.0}) {
				std::vector<double> q0{u0, std::log(tr0), std::log(tf0)};
				if (!opt.a) q0.insert(q0.begin(), std::clamp(y[0] / u0, la, ha));
				auto r = minimize_simplex(objective, q0, bounds, opt.simplex);
				total_iter += r.iterations;
				if (r.sse < best.sse) best = r;
			}

	const auto q = best.values();
	const auto p = to_params(q);
	FitResult res;
	res.params = {{"a", "", p.a * scale}, {"u_cap", "", p.u_cap}, {"tau_rec", "s", p.tau_rec}, {"tau_f", "s", p.tau_f}};
	res.sse = best.sse * scale * scale;
	res.iterations = total_iter;
	res.converged = best.converged;

	bool degenerate = !res.converged;
	for (std::size_t i = 0; i < q.size(); ++i) {
		const double tol = 1e-6 * std::max(1.0, bounds.hi[i] - bounds.lo[i]);
		if (q[i] - bounds.lo[i] <= tol || bounds.hi[i] - q[i] <= tol) degenerate = true;
	}
	// one-axis moves: u_cap by 0.05, time constants and a by a factor 2
	double y2 = 0.0;
	for (double v : y) y2 += v * v;
	for (std::size_t i = 0; i < q.size() && !degenerate; ++i) {
		const bool is_u = i == off;
		const bool is_a = !opt.a && i == 0;
		double rise = std::numeric_limits<double>::infinity();
		for (double dir : {-1.0, 1.0}) {
			auto qq = q;
			if (is_u)      qq[i] += 0.05 * dir;
			else if (is_a) qq[i] *= std::pow(2.0, dir);
			else           qq[i] += std::log(2.0) * dir;
			qq = detail::clip(std::move(qq), bounds);
			if (qq[i] == q[i]) continue;
			rise = std::min(rise, objective(qq) - best.sse);
		}
		if (rise <= 1e-9 * y2) degenerate = true;
	}
	if (!opt.a && ts.size() >= 2) {
		bool equal = true;
		const double d = ts[1] - ts[0];
		for (std::size_t k = 2; k < ts.size(); ++k)
			if (std::abs(ts[k] - ts[k - 1] - d) > 1e-9 * d) equal = false;
		if (equal) degenerate = true;
	}
	res.degenerate = degenerate;
	return res;
}

struct AmplitudePoint {
	double v;
	double dg_norm;
};

/*
 * Fits dg_norm = c_amp * (exp((|v| - v_th) / v0) - 1) over points above v_th.
 * Starts from v0 in {0.3, 1, 3, 10} V with c_amp solved in closed form for
 * each start.
 */
inline FitResult fit_amplitude_curve(std::span<const AmplitudePoint> points, double v_th,
                                     const SimplexOptions &simplex = {1e-12, 1e-26, 20000, 0.1, {}})
{
	std::vector<AmplitudePoint> pts;
	for (const auto &p : points)
		if (std::abs(p.v) > v_th) pts.push_back(p);
	if (pts.size() < 3)
		throw fit_error("fit_amplitude_curve: " + std::to_string(pts.size()) + " points above v_th, need at least 3");

	double scale = 0.0;
	for (const auto &p : pts) scale = std::max(scale, std::abs(p.dg_norm));
	FitResult res;
	if (scale == 0.0) {
		res.params = {{"c_amp", "", 0.0}, {"v0", "V", 1.0}};
		res.converged = true;
		res.degenerate = true;
		return res;
	}

	const double lc = 0.0, hc = 1e6;
	const double lv = std::log(1e-2), hv = std::log(1e2);
	const Bounds bounds{{lc, lv}, {hc, hv}};
	auto basis = [&](double v, double v0) { return std::expm1((std::abs(v) - v_th) / v0); };
	auto objective = [&](std::span<const double> q) {
		const double v0 = std::exp(q[1]);
		double s = 0.0;
		for (const auto &p : pts) {
			const double e = p.dg_norm / scale - q[0] * basis(p.v, v0);
			s += e * e;
		}
		return s;
	};

	FitResult best;
	best.sse = std::numeric_limits<double>::infinity();
	int total_iter = 0;
	for (double v0 : {0.3, 1.0, 3.0, 10.0}) {
		double num = 0.0, den = 0.0;
		for (const auto &p : pts) {
			const double b = basis(p.v, v0);
			num += b * p.dg_norm / scale;
			den += b * b;
		}
		const double c0 = std::clamp(den > 0 ? num / den : 0.0, lc, hc);
		auto r = minimize_simplex(objective, {c0, std::log(v0)}, bounds, simplex);
		total_iter += r.iterations;
		if (r.sse < best.sse) best = r;
	}
	const auto q = best.values();
	res.params = {{"c_amp", "", q[0] * scale}, {"v0", "V", std::clamp(std::exp(q[1]), 1e-2, 1e2)}};
	res.sse = best.sse * scale * scale;
	res.iterations = total_iter;
	res.converged = best.converged;
	res.degenerate = !res.converged || q[0] <= 1e-9 || q[1] - lv <= 1e-9 || hv - q[1] <= 1e-9;
	return res;
}

} // namespace memstp::fitting
