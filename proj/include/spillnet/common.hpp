// Shared utilities: error types, chi-square tail probabilities, deterministic
// normal RNG, numeric formatting, SHA-256, and small date helpers.
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace spillnet {

// Bad configuration (CLI flags, config JSON). CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure (non-finite recursion, singular system, ...). CLI exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double regularized_gamma_q(double a, double x);

// P(X > x) for X ~ chi-square(df).  Q(df/2, x/2); for df=2 this is exp(-x/2).
double chi_square_survival(double x, int df);

// Deterministic RNG: mt19937_64 + Box-Muller.  std::normal_distribution is
// implementation-defined, which would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on (0, 1), 53-bit resolution, never returns 0 or 1.
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
  }

  double gaussian();

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stateless 64-bit mixer, used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// Shortest decimal with `digits` significant digits ("%.*g"); -0 normalized to 0.
std::string format_sig(double x, int digits = 6);

// Median of a (not necessarily sorted) vector; average of the middle two for even n.
double median(std::vector<double> v);

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// Calendar helpers (proleptic Gregorian).
struct Date {
  int y = 1970, m = 1, d = 1;
  static Date parse(const std::string& iso);  // "YYYY-MM-DD"
  std::string str() const;
  long serial() const;                 // days since 1970-01-01
  static Date from_serial(long days);
  int weekday() const;                 // 0 = Sunday .. 6 = Saturday
  Date next_weekday() const;           // following Mon-Fri day
  auto operator<=>(const Date&) const = default;
};

}  // namespace spillnet
