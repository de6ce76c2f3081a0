#pragma once

// SI everywhere. The literals only exist to make presets and tests readable.

namespace memstp::units {

constexpr double operator""_S(long double v)  { return static_cast<double>(v); }
constexpr double operator""_S(unsigned long long v) { return static_cast<double>(v); }
constexpr double operator""_uS(long double v) { return static_cast<double>(v) * 1e-6; }
constexpr double operator""_uS(unsigned long long v) { return static_cast<double>(v) * 1e-6; }
constexpr double operator""_nS(long double v) { return static_cast<double>(v) * 1e-9; }
constexpr double operator""_nS(unsigned long long v) { return static_cast<double>(v) * 1e-9; }
constexpr double operator""_s(long double v)  { return static_cast<double>(v); }
constexpr double operator""_s(unsigned long long v) { return static_cast<double>(v); }
constexpr double operator""_ms(long double v) { return static_cast<double>(v) * 1e-3; }
constexpr double operator""_ms(unsigned long long v) { return static_cast<double>(v) * 1e-3; }
constexpr double operator""_us(long double v) { return static_cast<double>(v) * 1e-6; }
constexpr double operator""_us(unsigned long long v) { return static_cast<double>(v) * 1e-6; }
constexpr double operator""_V(long double v)  { return static_cast<double>(v); }
constexpr double operator""_V(unsigned long long v) { return static_cast<double>(v); }
constexpr double operator""_mV(long double v) { return static_cast<double>(v) * 1e-3; }
constexpr double operator""_mV(unsigned long long v) { return static_cast<double>(v) * 1e-3; }
constexpr double operator""_nJ(long double v) { return static_cast<double>(v) * 1e-9; }
constexpr double operator""_nJ(unsigned long long v) { return static_cast<double>(v) * 1e-9; }
constexpr double operator""_nF(long double v) { return static_cast<double>(v) * 1e-9; }
constexpr double operator""_nF(unsigned long long v) { return static_cast<double>(v) * 1e-9; }
constexpr double operator""_kOhm(long double v) { return static_cast<double>(v) * 1e3; }
constexpr double operator""_kOhm(unsigned long long v) { return static_cast<double>(v) * 1e3; }

} // namespace memstp::units
