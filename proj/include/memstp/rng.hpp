#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace memstp {

/*
 * Seeded random stream. The engine is std::mt19937_64, whose output sequence
 * is fixed by the standard. The distributions are implemented here rather
 * than taken from <random> because the standard library distributions are
 * implementation-defined, and outputs must be bit-identical across builds.
 */
class Rng {
public:
	using result_type = std::uint64_t;

	explicit Rng(std::uint64_t seed) : engine_(seed) {}

	std::uint64_t next_u64() { return engine_(); }

	// Uniform on [0, 1) with 53 random bits.
	double uniform()
	{
		return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
	}

	bool bernoulli(double p) { return uniform() < p; }

	// Standard normal via Box-Muller; the second variate is cached.
	double normal()
	{
		if (has_spare_) {
			has_spare_ = false;
			return spare_;
		}
		double u1 = uniform();
		while (u1 <= 0.0) u1 = uniform();
		const double u2 = uniform();
		const double r = std::sqrt(-2.0 * std::log(u1));
		const double phi = 2.0 * std::numbers::pi * u2;
		spare_ = r * std::sin(phi);
		has_spare_ = true;
		return r * std::cos(phi);
	}

	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

	double log_uniform(double lo, double hi)
	{
		return std::exp(uniform(std::log(lo), std::log(hi)));
	}

private:
	std::mt19937_64 engine_;
	double spare_ = 0.0;
	bool has_spare_ = false;
};

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
	z += 0x9E3779B97F4A7C15ULL;
	z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
	z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
	return z ^ (z >> 31);
}

/*
 * Seed of sub-stream `index` under `master`:
 *
 *   derive_seed(m, i) = mix64(mix64(m) ^ mix64(i + 1))
 *
 * Depends only on (master, index), never on scheduling, so Monte-Carlo
 * batches are identical for any thread count.
 */
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
	return mix64(mix64(master) ^ mix64(index + 1));
}

} // namespace memstp
