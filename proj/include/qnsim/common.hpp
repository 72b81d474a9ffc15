#pragma once
// Shared basic types for the simulator: integer aliases, simulated-time type,
// deterministic RNG, and the diagnostic record used by all validators.

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qnsim {

using i32 = std::int32_t;
using i64 = std::int64_t;
using u64 = std::uint64_t;

// Simulated time in nanoseconds.
using time_ns = i64;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Deterministic RNG. All stochastic draws in a simulation go through one
// instance so that a (scenario, seed) pair fully determines the run. The
// uniform double is built from raw bits instead of uniform_real_distribution,
// whose output is implementation-defined.
class Rng {
public:
    explicit Rng(u64 seed = 0) : eng_(seed) {}

    void reseed(u64 seed) { eng_.seed(seed); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi] inclusive (rejection-free for our small ranges).
    i64 randint(i64 lo, i64 hi) {
        u64 span = static_cast<u64>(hi - lo) + 1;
        return lo + static_cast<i64>(eng_() % span);
    }

    u64 raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

// One validation finding. `where` names the enclosing construct (block,
// routine, config key); `message` is human-readable.
struct Diag {
    std::string where;
    std::string message;
};

using DiagList = std::vector<Diag>;

inline std::string join_diags(const DiagList& ds) {
    std::string out;
    for (const auto& d : ds) {
        out += d.where;
        out += ": ";
        out += d.message;
        out += '\n';
    }
    return out;
}

// Fatal error during simulation setup (bad scenario, unparsable program...).
struct SetupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fatal internal inconsistency (would indicate a simulator bug).
// A program performed an illegal operation at run time (reading undefined
// shared-memory slots, touching unallocated qubits, dividing by zero, ...).
struct ExecError : std::runtime_error {
    explicit ExecError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace qnsim
