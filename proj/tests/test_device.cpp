#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include <memstp/device.hpp>
#include <memstp/rng.hpp>
#include <memstp/units.hpp>

using namespace memstp;
using namespace memstp::device;
using namespace memstp::units;

namespace {

DeviceState fresh(const DeviceParams &p) { return rest_state(p, 0.0); }

// Runs a -4 V train and returns the states after each pulse.
std::vector<DeviceState> train(DeviceState s, const DeviceParams &p, int n, double t_int, double v = -4.0)
{
	std::vector<DeviceState> out;
	for (int k = 0; k < n; ++k) {
		s = apply_pulse(s, p, {k * t_int, v, 10e-6}).state;
		out.push_back(s);
	}
	return out;
}

bool within_bounds(const DeviceState &s, const DeviceParams &p)
{
	const double g = s.conductance();
	return g >= p.g_min * (1 - 1e-12) && g <= p.g_max * (1 + 1e-12) && s.u >= 0 && s.u <= 1 && s.x >= 0 &&
	       s.x <= 1 && s.acc >= 0 && s.tau_d >= p.tau_d_min && s.tau_d <= p.tau_d_max;
}

} // namespace

TEST(DecayTo, ZeroIntervalIsIdentity)
{
	DeviceParams p;
	auto s = train(fresh(p), p, 2, 0.1).back();
	const auto d = decay_to(s, p, s.t_last);
	EXPECT_EQ(d.delta_g, s.delta_g);
	EXPECT_EQ(d.u, s.u);
	EXPECT_EQ(d.x, s.x);
	EXPECT_EQ(d.acc, s.acc);
}

TEST(DecayTo, ExactExponential)
{
	DeviceParams p;
	DeviceState s = fresh(p);
	s.delta_g = 0.2_uS;
	s.tau_d = 0.1;
	const auto d = decay_to(s, p, 0.1);
	EXPECT_NEAR(d.delta_g / 1e-6, 0.07357588823428847, 1e-12);
	EXPECT_EQ(d.g_eq, s.g_eq);
}

TEST(DecayTo, SevenTimeConstantsLeaveUnderOnePermille)
{
	DeviceParams p;
	const auto s = train(fresh(p), p, 3, 0.4).back();
	const double offset = s.conductance() - s.g_eq;
	const auto d = decay_to(s, p, s.t_last + 7 * s.tau_d);
	EXPECT_LT(std::abs(d.conductance() - d.g_eq), 1e-3 * offset);
}

TEST(DecayTo, TimeReversalIsRejected)
{
	DeviceParams p;
	auto s = fresh(p);
	s = decay_to(s, p, 1.0);
	EXPECT_THROW(decay_to(s, p, 0.5), contract_error);
	EXPECT_THROW(apply_pulse(s, p, {0.5, -4.0, 10e-6}), contract_error);
}

TEST(PulseEnergy, Arithmetic)
{
	EXPECT_NEAR(pulse_energy(3_uS, 4.0, 10_us), 4.8e-10, 1e-22);
	EXPECT_EQ(pulse_energy(3_uS, 0.0, 10_us), 0.0);
	EXPECT_DOUBLE_EQ(pulse_energy(3_uS, 4.0, 20_us), 2 * pulse_energy(3_uS, 4.0, 10_us));
	EXPECT_THROW(pulse_energy(3_uS, 4.0, 0.0), contract_error);
}

TEST(ApplyPulse, SubThresholdOnlyAddsEnergy)
{
	DeviceParams p;
	const auto s = fresh(p);
	const auto r = apply_pulse(s, p, {0.0, 0.1, 10e-6});
	EXPECT_EQ(r.jump, 0.0);
	EXPECT_EQ(r.state.delta_g, 0.0);
	EXPECT_EQ(r.state.u, 0.0);
	EXPECT_EQ(r.state.x, 1.0);
	EXPECT_GT(r.state.acc, 0.0);
}

TEST(ApplyPulse, FirstPulseUtilizationEqualsIncrement)
{
	DeviceParams p;
	const auto r = apply_pulse(fresh(p), p, {0.0, -4.0, 10e-6});
	EXPECT_EQ(r.state.u, 0.2);
}

TEST(ApplyPulse, PairedPulseFacilitationMatchesRecursion)
{
	DeviceParams p;
	auto r1 = apply_pulse(fresh(p), p, {0.0, -4.0, 10e-6});
	auto r2 = apply_pulse(r1.state, p, {0.4, -4.0, 10e-6});

	// independent evaluation of the update rule with the default parameters
	const double s = p.c_amp * (std::exp((4.0 - p.v_th) / p.v0) - 1.0);
	double u = p.u_dev, x = 1.0;
	const double j1 = (p.g_max - p.g_eq0) * s * u * x;
	x *= 1 - u;
	const double d = j1 * std::exp(-0.4 / p.tau_d_min); // first pulse has no predecessor: tau_d clamps low
	u *= std::exp(-0.4 / p.tau_f_dev);
	x = 1 - (1 - x) * std::exp(-0.4 / p.tau_rec_dev);
	u += p.u_dev * (1 - u);
	const double j2 = (p.g_max - p.g_eq0 - d) * s * u * x;

	EXPECT_NEAR(r1.jump, j1, 1e-9 * j1);
	EXPECT_NEAR(r2.jump, j2, 1e-9 * j2);
	// frozen values of the same recursion
	EXPECT_NEAR(r1.jump, 3.194528049465325e-08, 1e-18);
	EXPECT_NEAR(r2.jump, 4.9075078144295496e-08, 1e-18);
	EXPECT_GT(r2.jump, r1.jump);
}

TEST(ApplyPulse, SaturatingModePullsEquilibriumDown)
{
	DeviceParams p;
	auto s = fresh(p);
	s.mode = Mode::Saturating;
	const auto r = apply_pulse(s, p, {0.0, -4.0, 10e-6});
	EXPECT_NEAR(r.state.g_eq, p.g_eq0 - p.kappa_sat * (p.g_eq0 - p.g_floor), 1e-18);
}

TEST(ApplyPulse, JumpNeverExceedsHeadroom)
{
	DeviceParams p;
	p.c_amp = 50.0; // absurdly strong writes
	auto s = fresh(p);
	for (int k = 0; k < 20; ++k) {
		s = apply_pulse(s, p, {k * 0.01, -4.0, 10e-6}).state;
		EXPECT_LE(s.conductance(), p.g_max * (1 + 1e-12));
	}
}

TEST(ApplyPulse, PolaritySensitiveStepsDownForPositivePulses)
{
	DeviceParams p;
	p.polarity_sensitive = true;
	p.e0 = 1e-12;
	const auto up = apply_pulse(fresh(p), p, {0.0, -4.0, 10e-6});
	const auto down = apply_pulse(fresh(p), p, {0.0, 4.0, 10e-6});
	ASSERT_TRUE(up.nonvolatile && down.nonvolatile);
	EXPECT_GT(up.state.g_eq, p.g_eq0);
	EXPECT_LT(down.state.g_eq, p.g_eq0);
}

TEST(ModeProbability, MidpointAndStepLimit)
{
	DeviceParams p;
	EXPECT_DOUBLE_EQ(saturation_probability(p.g_c, p), 0.5);
	p.sigma_s = 1e-30;
	Rng rng(3);
	for (int k = 0; k < 100; ++k) EXPECT_EQ(sample_mode(p.g_c + 1e-9, p, rng), Mode::Saturating);
}

TEST(ModeProbability, FrequencyFiveWidthsBelowMidpoint)
{
	DeviceParams p;
	const double g0 = p.g_c - 5 * p.sigma_s;
	const double ps = saturation_probability(g0, p);
	EXPECT_NEAR(ps, 0.0066928509242848554, 1e-15);
	Rng rng(11);
	const int n = 10000;
	int hits = 0;
	for (int k = 0; k < n; ++k) hits += sample_mode(g0, p, rng) == Mode::Saturating;
	EXPECT_LE(std::abs(hits - n * ps), 3 * std::sqrt(n * ps * (1 - ps)));
}

TEST(ClassifyEvent, Rule)
{
	EXPECT_EQ(classify_event(2.9_uS, 3.0_uS), EventLabel::STP_F);
	EXPECT_EQ(classify_event(3.0_uS, 2.9_uS), EventLabel::STP_S);
	EXPECT_EQ(classify_event(3.0_uS, 3.0_uS), EventLabel::STP_F);
}

TEST(IvSweep, PinnedAtZeroVoltage)
{
	DeviceParams p;
	const auto wave = triangular_wave(2.0, 2.0, 1e-3, 2);
	const auto tr = iv_sweep(fresh(p), p, wave, 1e-3);
	int zeros = 0;
	for (const auto &s : tr)
		if (s.v == 0.0) {
			EXPECT_EQ(s.i, 0.0);
			++zeros;
		}
	EXPECT_GE(zeros, 5);
	EXPECT_GT(loop_area(tr), 0.0);
}

TEST(IvSweep, FrozenDeviceIsOhmic)
{
	DeviceParams p;
	p.c_amp = 0.0;
	p.kappa_sat = 0.0;
	p.dg_nv = 0.0;
	const auto wave = triangular_wave(2.0, 2.0, 1e-3, 1);
	const auto tr = iv_sweep(fresh(p), p, wave, 1e-3);
	for (const auto &s : tr) EXPECT_NEAR(s.i, p.g_eq0 * s.v, 1e-20);
	EXPECT_NEAR(loop_area(tr), 0.0, 1e-18);
}

TEST(Properties, BoundsHoldUnderRandomStimulation)
{
	Rng rng(2024);
	for (int run = 0; run < 50; ++run) {
		DeviceParams p;
		p.c_amp = rng.uniform(0.01, 2.0);
		p.kappa_sat = rng.uniform(0.0, 0.9);
		p.e0 = rng.log_uniform(1e-11, 1e-8);
		p.dg_nv = rng.uniform(0.0, 0.2e-6);
		p.polarity_sensitive = rng.bernoulli(0.5);
		Memristor m(p);
		double t = 0.0;
		for (int k = 0; k < 200; ++k) {
			t += rng.log_uniform(1e-4, 30.0);
			const double v = rng.uniform(-5.0, 5.0);
			m.pulse({t, v, rng.uniform(1e-6, 1e-4)}, rng);
			const auto &st = m.state();
			ASSERT_TRUE(within_bounds(st, p)) << "run " << run << " pulse " << k << " g " << st.conductance() << " u " << st.u
			                                  << " x " << st.x << " acc " << st.acc << " tau_d " << st.tau_d;
		}
	}
}

TEST(Properties, RelaxationIsMonotone)
{
	DeviceParams p;
	const auto s = train(fresh(p), p, 3, 0.1).back();
	double prev = std::abs(s.conductance() - s.g_eq);
	for (int k = 1; k <= 200; ++k) {
		const double dev = std::abs(decay_to(s, p, s.t_last + 0.01 * k).conductance() - s.g_eq);
		EXPECT_LE(dev, prev);
		prev = dev;
	}
}

TEST(Properties, DecayComposition)
{
	Rng rng(5);
	DeviceParams p;
	// dyadic times keep the interval arithmetic exact; exp(a) exp(b) vs exp(a + b) costs a few ulps
	const auto s = decay_to(train(fresh(p), p, 3, 0.125).back(), p, 0.5);
	auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); };
	for (int k = 0; k < 1000; ++k) {
		const double t1 = s.t_last + std::floor(rng.uniform(0.0, 2048.0)) / 1024.0;
		const double t2 = t1 + std::floor(rng.uniform(0.0, 2048.0)) / 1024.0;
		const auto a = decay_to(decay_to(s, p, t1), p, t2);
		const auto b = decay_to(s, p, t2);
		EXPECT_LE(rel(a.delta_g, b.delta_g), 1e-13);
		EXPECT_LE(rel(a.u, b.u), 1e-13);
		EXPECT_LE(rel(a.x, b.x), 1e-13);
		EXPECT_LE(rel(a.acc, b.acc), 1e-13);
	}
}

TEST(Properties, JumpIncreasesWithAmplitude)
{
	DeviceParams p;
	double prev = 0.0;
	for (double v = 1.1; v <= 6.0; v += 0.1) {
		const double j = apply_pulse(fresh(p), p, {0.0, v, 10e-6}).jump;
		EXPECT_GT(j, prev) << v;
		prev = j;
	}
}

TEST(Properties, RateLaw)
{
	DeviceParams p;
	EXPECT_GT(decay_time_constant(p, 0.02), decay_time_constant(p, 0.2));
	p.tau_d_anchors = {{0.02, 2.0}, {0.2, 0.2}};
	EXPECT_DOUBLE_EQ(decay_time_constant(p, 0.02), 2.0);
	EXPECT_NEAR(decay_time_constant(p, std::sqrt(0.02 * 0.2)), std::sqrt(2.0 * 0.2), 1e-12);
	EXPECT_DOUBLE_EQ(decay_time_constant(p, 5.0), 0.2);
}

TEST(Properties, AccumulatorFiresAtCeilOfBarrierOverPulseEnergy)
{
	DeviceParams p;
	p.tau_acc = std::numeric_limits<double>::infinity();
	p.beta = 0.0;
	p.e0 = 2.4e-9;
	p.v_th = 10.0; // pulses below threshold keep G fixed, so every pulse carries the same energy
	const double g = p.g_eq0;
	const double w = 4.8e-10 / (g * 16.0);
	auto s = fresh(p);
	int fired = -1;
	for (int k = 1; k <= 10 && fired < 0; ++k) {
		auto r = apply_pulse(s, p, {k * 1.0, 4.0, w});
		s = r.state;
		if (r.nonvolatile) fired = k;
	}
	EXPECT_EQ(fired, 5);
}

TEST(Properties, SeedDeterminism)
{
	DeviceParams p;
	auto run = [&p](std::uint64_t seed) {
		Memristor m(p);
		Rng rng(seed);
		std::vector<double> g;
		for (int k = 0; k < 300; ++k) {
			m.pulse({k * 1.5, -4.0, 10e-6}, rng);
			g.push_back(m.conductance());
		}
		return g;
	};
	EXPECT_EQ(run(9), run(9));
	EXPECT_NE(run(9), run(10));
}

TEST(Memristor, ModeDrawnOncePerTrain)
{
	DeviceParams p;
	p.g_c = p.g_eq0; // p_S = 0.5 at rest
	Memristor m(p);
	Rng rng(1);
	for (int trial = 0; trial < 50; ++trial) {
		const double t0 = 10.0 * (trial + 1);
		m.pulse({t0, -4.0, 10e-6}, rng);
		const Mode mode = m.state().mode;
		m.pulse({t0 + 0.25, -4.0, 10e-6}, rng);
		m.pulse({t0 + 0.5, -4.0, 10e-6}, rng);
		EXPECT_EQ(m.state().mode, mode);
	}
}

TEST(Memristor, ReadRejectsWriteAmplitude)
{
	Memristor m(DeviceParams{});
	EXPECT_THROW(m.read(0.0, 2.0, 10e-6), contract_error);
	EXPECT_NO_THROW(m.read(0.0, 0.1, 10e-6));
}

TEST(Params, ValidationRejectsBadValues)
{
	DeviceParams p;
	p.g_min = 4e-6;
	EXPECT_THROW(p.validate(), contract_error);
	p = {};
	p.u_dev = 1.5;
	EXPECT_THROW(p.validate(), contract_error);
	p = {};
	EXPECT_NO_THROW(p.validate());
}
