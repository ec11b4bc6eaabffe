#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace colam {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mismatched vector/matrix dimensions.
struct ShapeError : Error {
    using Error::Error;
};

// Malformed binary or JSON input.
struct ParseError : Error {
    using Error::Error;
};

// Invalid configuration (field-level message).
struct ConfigError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required (divergence, bad logits).
struct NumericError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::string to_hex16(std::uint64_t v);

// ---------------------------------------------------------------------------
// Seed sub-streams
//
// Every random decision in a run draws from a stream derived from the master
// seed and a stream name (plus optional indices). Streams never share state,
// so adding draws to one component cannot shift any other component.
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state);

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t a);
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t a,
                          std::uint64_t b);

// mt19937_64 engine with hand-rolled distributions. The standard library's
// distribution objects are implementation-defined, which would break bitwise
// reproducibility across toolchains; these are pinned.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n) without modulo bias.
    std::uint64_t uniform_index(std::uint64_t n);

    // Standard normal via Box-Muller.
    double normal();

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

// Shortest-exact decimal is not stable across libcs; %.17g round-trips
// doubles losslessly and is what every CSV in the artifact uses.
std::string format_double(double v);

std::string join_path(const std::string& a, const std::string& b);

// ---------------------------------------------------------------------------
// Little-endian binary IO
// ---------------------------------------------------------------------------

void put_u32_le(std::vector<unsigned char>& out, std::uint32_t v);
void put_f64_le(std::vector<unsigned char>& out, double v);
std::uint32_t get_u32_le(const unsigned char* p);
double get_f64_le(const unsigned char* p);

std::vector<unsigned char> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<unsigned char>& bytes);
std::string read_file_text(const std::string& path);
void write_file_text(const std::string& path, const std::string& text);

}  // namespace colam
