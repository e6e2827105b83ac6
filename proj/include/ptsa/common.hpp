#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace ptsa {

// Raised when a caller breaks an operation's precondition (illegal action,
// double expansion, selecting on a leaf, ...).
class ContractViolation : public std::logic_error
{
public:
	using std::logic_error::logic_error;
};

inline std::uint64_t splitmix64(std::uint64_t x) noexcept
{
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept
{
	return splitmix64(a ^ (splitmix64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// 53-bit mantissa fill; identical on every platform, unlike
// std::uniform_real_distribution whose algorithm is unspecified.
inline double unit_double(std::uint64_t bits) noexcept
{
	return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double uniform01(std::mt19937_64 &rng) { return unit_double(rng()); }

inline std::size_t uniform_index(std::mt19937_64 &rng, std::size_t n)
{
	return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

// Box-Muller on two hashed uniforms. |z| < 8.6 for every 53-bit input.
inline double hashed_normal(std::uint64_t key) noexcept
{
	const double u1 = 1.0 - unit_double(splitmix64(key));
	const double u2 = unit_double(splitmix64(key ^ 0xda3e39cb94b95bdbULL));
	return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline constexpr double kNormalMagnitudeBound = 8.6;

} // namespace ptsa
