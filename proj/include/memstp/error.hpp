#pragma once

#include <stdexcept>
#include <string>

namespace memstp {

// Violated precondition of a model operation (time reversal, bad dt, ...).
struct contract_error : std::logic_error {
	using std::logic_error::logic_error;
};

// Malformed or inconsistent configuration.
struct config_error : std::runtime_error {
	using std::runtime_error::runtime_error;
};

// A fit could not be attempted (too few usable samples, bad input shape).
struct fit_error : std::runtime_error {
	using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string &what)
{
	if (!cond) throw contract_error(what);
}

} // namespace detail

} // namespace memstp
