#pragma once

/*
 * Run configuration: a JSON document naming a preset, a seed and flat
 * parameter overrides.
 *
 *   {"preset": "fig4_sequence", "seed": 42, "overrides": {"t_int": 0.25}}
 *
 * Unknown keys are errors. A resolved run is written back as a manifest that
 * lists every parameter, so the manifest is itself a valid config that
 * reproduces the run.
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include <memstp/device.hpp>
#include <memstp/error.hpp>
#include <memstp/network.hpp>
#include <memstp/protocols.hpp>

#ifndef MEMSTP_VERSION
#define MEMSTP_VERSION "0.0.0"
#endif

namespace memstp::config {

using json = nlohmann::ordered_json;

inline constexpr std::string_view tool_version = MEMSTP_VERSION;

enum class Kind { Protocol, Decay, Amplitude, Detector, Iv };

inline std::string_view to_string(Kind k)
{
	switch (k) {
	case Kind::Protocol:  return "protocol";
	case Kind::Decay:     return "decay";
	case Kind::Amplitude: return "amplitude";
	case Kind::Detector:  return "detector";
	case Kind::Iv:        return "iv";
	}
	return "protocol";
}

inline Kind kind_from_string(std::string_view s)
{
	for (Kind k : {Kind::Protocol, Kind::Decay, Kind::Amplitude, Kind::Detector, Kind::Iv})
		if (to_string(k) == s) return k;
	throw config_error("unknown experiment '" + std::string(s) + "' (protocol, decay, amplitude, detector, iv)");
}

struct Settings {
	std::string preset;
	Kind kind = Kind::Protocol;

	device::DeviceParams device;
	device::ModePolicy policy = device::ModePolicy::Stochastic;

	// event protocols; plan.train is also the detector input train
	protocols::ExperimentPlan plan;
	protocols::BinSpec bins;

	// detector circuits (net.device and net.mode_policy are taken from above)
	network::Topology topology = network::Topology::SequenceDetector;
	std::string pattern = "both"; // ab, ba or both
	double gap = -1.0;            // negative: t_int; coincidence: separation of the apart run
	int trials = 1000;
	network::NetworkConfig net;

	std::vector<double> t_ints{0.02, 0.05, 0.1, 0.15, 0.2};
	protocols::DecaySweepOptions decay;
	std::vector<double> amplitudes{1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
	double amplitude_w = 10e-6;

	double iv_amplitude = 2.0;
	double iv_period = 2.0;
	double iv_dt = 1e-3;
	int iv_cycles = 2;

	network::NetworkConfig network_config() const
	{
		auto c = net;
		c.device = device;
		c.mode_policy = policy;
		return c;
	}

	network::PatternSpec pattern_spec(network::Order order) const
	{
		network::PatternSpec p;
		p.order = order;
		p.train = plan.train;
		p.gap = gap;
		return p;
	}
};

struct RunConfig {
	std::string preset;
	std::uint64_t seed = 0;
	json overrides = json::object();
	std::string out_dir = "out";
};

namespace fields {

template <class T>
T as(const json &j, const std::string &key);

template <>
inline double as<double>(const json &j, const std::string &key)
{
	if (!j.is_number()) throw config_error("parameter '" + key + "': expected a number, got " + j.dump());
	return j.get<double>();
}

template <>
inline int as<int>(const json &j, const std::string &key)
{
	if (!j.is_number_integer()) throw config_error("parameter '" + key + "': expected an integer, got " + j.dump());
	return j.get<int>();
}

template <>
inline bool as<bool>(const json &j, const std::string &key)
{
	if (!j.is_boolean()) throw config_error("parameter '" + key + "': expected true or false, got " + j.dump());
	return j.get<bool>();
}

template <>
inline std::string as<std::string>(const json &j, const std::string &key)
{
	if (!j.is_string()) throw config_error("parameter '" + key + "': expected a string, got " + j.dump());
	return j.get<std::string>();
}

template <>
inline std::vector<double> as<std::vector<double>>(const json &j, const std::string &key)
{
	if (!j.is_array()) throw config_error("parameter '" + key + "': expected an array of numbers");
	std::vector<double> v;
	for (std::size_t k = 0; k < j.size(); ++k) v.push_back(as<double>(j[k], key + "[" + std::to_string(k) + "]"));
	return v;
}

struct Field {
	std::string name;
	std::function<json(const Settings &)> get;
	std::function<void(Settings &, const json &)> set;
};

template <class T, class Access>
Field plain(std::string name, Access access)
{
	return {name, [access](const Settings &s) { return json(access(s)); },
	        [access, name](Settings &s, const json &j) { access(s) = as<T>(j, name); }};
}

#define MEMSTP_FIELD(key, member)                                                                                  \
	plain<std::remove_cvref_t<decltype(std::declval<Settings &>().member)>>(key,                                   \
	                                                                          [](auto &s) -> auto & { return s.member; })

inline const std::vector<Field> &registry()
{
	static const std::vector<Field> r = [] {
		std::vector<Field> f{
		    // device
		    MEMSTP_FIELD("g_min", device.g_min),
		    MEMSTP_FIELD("g_max", device.g_max),
		    MEMSTP_FIELD("g_eq0", device.g_eq0),
		    MEMSTP_FIELD("v_th", device.v_th),
		    MEMSTP_FIELD("v0", device.v0),
		    MEMSTP_FIELD("c_amp", device.c_amp),
		    MEMSTP_FIELD("u_dev", device.u_dev),
		    MEMSTP_FIELD("tau_f_dev", device.tau_f_dev),
		    MEMSTP_FIELD("tau_rec_dev", device.tau_rec_dev),
		    MEMSTP_FIELD("tau_d_base", device.tau_d_base),
		    MEMSTP_FIELD("gamma", device.gamma),
		    MEMSTP_FIELD("tau_d_min", device.tau_d_min),
		    MEMSTP_FIELD("tau_d_max", device.tau_d_max),
		    MEMSTP_FIELD("dt_ref", device.dt_ref),
		    MEMSTP_FIELD("kappa_sat", device.kappa_sat),
		    MEMSTP_FIELD("g_floor", device.g_floor),
		    MEMSTP_FIELD("g_c", device.g_c),
		    MEMSTP_FIELD("sigma_s", device.sigma_s),
		    MEMSTP_FIELD("e0", device.e0),
		    MEMSTP_FIELD("beta", device.beta),
		    MEMSTP_FIELD("tau_acc", device.tau_acc),
		    MEMSTP_FIELD("dg_nv", device.dg_nv),
		    MEMSTP_FIELD("t_rec_min", device.t_rec_min),
		    MEMSTP_FIELD("polarity_sensitive", device.polarity_sensitive),
		    // train and event protocol
		    MEMSTP_FIELD("n_pulses", plan.train.n),
		    MEMSTP_FIELD("v", plan.train.v),
		    MEMSTP_FIELD("w", plan.train.w),
		    MEMSTP_FIELD("t_int", plan.train.t_int),
		    MEMSTP_FIELD("repeats", plan.repeats),
		    MEMSTP_FIELD("t_rec", plan.t_rec),
		    MEMSTP_FIELD("probe_v", plan.read_v),
		    MEMSTP_FIELD("sample_dt", plan.sample_dt),
		    MEMSTP_FIELD("post_delay", plan.post_delay),
		    MEMSTP_FIELD("bin_lo", bins.lo),
		    MEMSTP_FIELD("bin_hi", bins.hi),
		    MEMSTP_FIELD("n_bins", bins.n_bins),
		    // neuron
		    MEMSTP_FIELD("c_m", net.neuron.c_m),
		    MEMSTP_FIELD("g_l", net.neuron.g_l),
		    MEMSTP_FIELD("e_l", net.neuron.e_l),
		    MEMSTP_FIELD("v_t", net.neuron.v_t),
		    MEMSTP_FIELD("delta_t", net.neuron.delta_t),
		    MEMSTP_FIELD("v_peak", net.neuron.v_peak),
		    MEMSTP_FIELD("v_reset", net.neuron.v_reset),
		    MEMSTP_FIELD("t_ref", net.neuron.t_ref),
		    // detector
		    MEMSTP_FIELD("pattern", pattern),
		    MEMSTP_FIELD("gap", gap),
		    MEMSTP_FIELD("trials", trials),
		    MEMSTP_FIELD("r_static", net.r_static),
		    MEMSTP_FIELD("rc_r", net.rc_r),
		    MEMSTP_FIELD("rc_c", net.rc_c),
		    MEMSTP_FIELD("read_v", net.read_v),
		    MEMSTP_FIELD("noise_v", net.noise_v),
		    MEMSTP_FIELD("write_transient", net.write_transient),
		    MEMSTP_FIELD("recovery", net.recovery),
		    MEMSTP_FIELD("tail", net.tail),
		    MEMSTP_FIELD("dt", net.dt),
		    // sweeps
		    MEMSTP_FIELD("t_ints", t_ints),
		    MEMSTP_FIELD("decay_pulses", decay.n_pulses),
		    MEMSTP_FIELD("decay_v", decay.v),
		    MEMSTP_FIELD("decay_w", decay.w),
		    MEMSTP_FIELD("decay_sample_dt", decay.sample_dt),
		    MEMSTP_FIELD("decay_window", decay.window),
		    MEMSTP_FIELD("recovery_checkpoints", decay.recovery_checkpoints),
		    MEMSTP_FIELD("recovery_tol", decay.recovery_tol),
		    MEMSTP_FIELD("amplitudes", amplitudes),
		    MEMSTP_FIELD("amplitude_w", amplitude_w),
		    MEMSTP_FIELD("iv_amplitude", iv_amplitude),
		    MEMSTP_FIELD("iv_period", iv_period),
		    MEMSTP_FIELD("iv_dt", iv_dt),
		    MEMSTP_FIELD("iv_cycles", iv_cycles),
		};
		f.insert(f.begin(), Field{"experiment", [](const Settings &s) { return json(std::string(to_string(s.kind))); },
		                          [](Settings &s, const json &j) { s.kind = kind_from_string(as<std::string>(j, "experiment")); }});
		f.push_back({"mode_policy", [](const Settings &s) { return json(std::string(device::to_string(s.policy))); },
		             [](Settings &s, const json &j) {
			             s.policy = device::mode_policy_from_string(as<std::string>(j, "mode_policy"));
		             }});
		f.push_back({"topology", [](const Settings &s) { return json(std::string(network::to_string(s.topology))); },
		             [](Settings &s, const json &j) {
			             s.topology = network::topology_from_string(as<std::string>(j, "topology"));
		             }});
		f.push_back({"tau_d_anchors",
		             [](const Settings &s) {
			             json a = json::array();
			             for (const auto &r : s.device.tau_d_anchors) a.push_back({r.interval, r.tau_d});
			             return a;
		             },
		             [](Settings &s, const json &j) {
			             if (!j.is_array()) throw config_error("parameter 'tau_d_anchors': expected [[interval, tau_d], ...]");
			             s.device.tau_d_anchors.clear();
			             for (const auto &e : j) {
				             if (!e.is_array() || e.size() != 2)
					             throw config_error("parameter 'tau_d_anchors': each entry must be [interval, tau_d]");
				             s.device.tau_d_anchors.push_back(
				                 {as<double>(e[0], "tau_d_anchors"), as<double>(e[1], "tau_d_anchors")});
			             }
		             }});
		return f;
	}();
	return r;
}

#undef MEMSTP_FIELD

inline const Field *find(std::string_view name)
{
	for (const auto &f : registry())
		if (f.name == name) return &f;
	return nullptr;
}

} // namespace fields

inline const std::vector<std::string> &preset_names()
{
	static const std::vector<std::string> n{"fig2_stp",     "fig2f_drift",  "fig3a_decay",
	                                        "fig3b_amplitude", "fig4_sequence", "fig4_sequence_deterministic",
	                                        "fig4_control", "s12_coincidence", "iv_sweep"};
	return n;
}

inline Settings preset(std::string_view name)
{
	Settings s;
	s.preset = std::string(name);
	if (name == "fig2_stp") {
		s.kind = Kind::Protocol;
		s.plan.train = {3, -4.0, 10e-6, 0.4};
		s.plan.repeats = 600;
		s.plan.t_rec = 10.0;
	} else if (name == "fig2f_drift") {
		s.kind = Kind::Protocol;
		s.plan.train = {3, 4.0, 10e-6, 0.2};
		s.plan.repeats = 100;
		s.plan.t_rec = 20.0;
	} else if (name == "fig3a_decay") {
		s.kind = Kind::Decay;
		s.policy = device::ModePolicy::Facilitating;
	} else if (name == "fig3b_amplitude") {
		s.kind = Kind::Amplitude;
		s.policy = device::ModePolicy::Facilitating;
	} else if (name == "fig4_sequence" || name == "fig4_sequence_deterministic" || name == "fig4_control") {
		s.kind = Kind::Detector;
		s.device = network::detector_device();
		s.plan.train = {3, -4.0, 10e-6, 0.25};
		s.topology = name == "fig4_control" ? network::Topology::ControlRC : network::Topology::SequenceDetector;
		if (name == "fig4_sequence_deterministic") {
			s.policy = device::ModePolicy::Facilitating;
			s.net.noise_v = 0.0;
		} else {
			s.net.noise_v = 5e-3;
		}
	} else if (name == "s12_coincidence") {
		s.kind = Kind::Detector;
		s.device = network::detector_device();
		s.policy = device::ModePolicy::Facilitating;
		s.plan.train = {3, -4.0, 10e-6, 0.25};
		s.topology = network::Topology::CoincidenceDetector;
		s.gap = 2.0;
		s.trials = 1;
		// threshold 80 mV above the standing level of two memristive inputs
		const double base = 2.0 * s.device.g_eq0 * s.net.read_v / s.net.neuron.g_l;
		s.net.neuron.v_t = base + 0.08;
		s.net.neuron.v_peak = base + 0.18;
		s.net.neuron.v_reset = base;
	} else if (name == "iv_sweep") {
		s.kind = Kind::Iv;
		s.policy = device::ModePolicy::Facilitating;
	} else {
		std::string known;
		for (const auto &n : preset_names()) known += (known.empty() ? "" : ", ") + n;
		throw config_error("unknown preset '" + std::string(name) + "' (known: " + known + ")");
	}
	return s;
}

inline void validate(const Settings &s)
{
	try {
		s.device.validate();
		s.net.neuron.validate();
		s.plan.validate(s.device);
		s.bins.validate();
		detail::require(s.pattern == "ab" || s.pattern == "ba" || s.pattern == "both", "pattern must be ab, ba or both");
		detail::require(s.trials >= 1, "trials must be >= 1");
		detail::require(s.net.dt > 0 && s.net.dt <= s.net.neuron.tau_m() / 10.0, "dt must lie in (0, tau_m / 10]");
		detail::require(s.net.recovery >= 0 && s.net.tail >= 0, "recovery and tail must be >= 0");
		detail::require(!s.t_ints.empty() && !s.amplitudes.empty(), "sweep lists must not be empty");
		for (double t : s.t_ints) detail::require(t > s.decay.w, "t_ints must exceed decay_w");
		detail::require(s.decay.n_pulses >= 1 && s.decay.sample_dt > 0 && s.decay.window > 0, "bad decay sweep settings");
		detail::require(s.iv_period > 0 && s.iv_dt > 0 && s.iv_dt < s.iv_period && s.iv_cycles >= 1, "bad iv sweep settings");
	} catch (const contract_error &e) {
		throw config_error(std::string("invalid parameters: ") + e.what());
	}
}

inline void apply_overrides(Settings &s, const json &overrides)
{
	if (!overrides.is_object()) throw config_error("'overrides' must be an object");
	for (const auto &[key, value] : overrides.items()) {
		const auto *f = fields::find(key);
		if (!f) throw config_error("overrides: unknown parameter '" + key + "'");
		f->set(s, value);
	}
}

inline Settings resolve(const RunConfig &rc)
{
	Settings s = preset(rc.preset);
	apply_overrides(s, rc.overrides);
	validate(s);
	return s;
}

inline RunConfig parse_config(std::string_view text)
{
	json doc;
	try {
		doc = json::parse(text);
	} catch (const json::parse_error &e) {
		throw config_error(std::string("config is not valid JSON: ") + e.what());
	}
	if (!doc.is_object()) throw config_error("config must be a JSON object");
	RunConfig rc;
	bool have_preset = false, have_seed = false;
	for (const auto &[key, value] : doc.items()) {
		if (key == "preset") {
			if (!value.is_string()) throw config_error("field 'preset': expected a string");
			rc.preset = value.get<std::string>();
			have_preset = true;
		} else if (key == "seed") {
			if (!value.is_number_unsigned()) throw config_error("field 'seed': expected a non-negative integer");
			rc.seed = value.get<std::uint64_t>();
			have_seed = true;
		} else if (key == "overrides") {
			if (!value.is_object()) throw config_error("field 'overrides': expected an object");
			rc.overrides = value;
		} else if (key == "out_dir") {
			if (!value.is_string()) throw config_error("field 'out_dir': expected a string");
			rc.out_dir = value.get<std::string>();
		} else if (key == "tool_version") {
			if (!value.is_string()) throw config_error("field 'tool_version': expected a string");
		} else {
			throw config_error("unknown key '" + key + "'");
		}
	}
	if (!have_preset) throw config_error("missing required field 'preset'");
	if (!have_seed) throw config_error("missing required field 'seed'");
	// catch unknown names and bad values early
	resolve(rc);
	return rc;
}

// Every parameter, in registry order.
inline json parameters(const Settings &s)
{
	json o = json::object();
	for (const auto &f : fields::registry()) o[f.name] = f.get(s);
	return o;
}

inline json manifest(const Settings &s, std::uint64_t seed)
{
	json m = json::object();
	m["tool_version"] = std::string(tool_version);
	m["preset"] = s.preset;
	m["seed"] = seed;
	m["overrides"] = parameters(s);
	return m;
}

} // namespace memstp::config
