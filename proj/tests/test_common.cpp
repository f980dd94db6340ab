#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "spillnet/common.hpp"

using namespace spillnet;

TEST_CASE("chi_square_survival closed forms") {
  // df = 2: exp(-x/2); df = 4: (1 + x/2) exp(-x/2).
  for (double x : {0.0, 0.5, 1.0, 4.0, 10.0, 25.0}) {
    CHECK(chi_square_survival(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
    CHECK(chi_square_survival(x, 4) ==
          doctest::Approx((1 + x / 2) * std::exp(-x / 2)).epsilon(1e-12));
    CHECK(chi_square_survival(x, 1) ==
          doctest::Approx(std::erfc(std::sqrt(x / 2))).epsilon(1e-10));
  }
  CHECK(chi_square_survival(0.0, 7) == doctest::Approx(1.0));
  double prev = 1.0;
  for (double x = 0.5; x < 40; x += 0.5) {
    double q = chi_square_survival(x, 3);
    CHECK(q <= prev);
    CHECK(q >= 0.0);
    prev = q;
  }
}

TEST_CASE("regularized_gamma_q at a = 1") {
  for (double x : {0.1, 1.0, 3.0, 8.0})
    CHECK(regularized_gamma_q(1.0, x) == doctest::Approx(std::exp(-x)).epsilon(1e-12));
}

TEST_CASE("format_sig") {
  CHECK(format_sig(0.5) == "0.5");
  CHECK(format_sig(-0.0) == "0");
  CHECK(format_sig(0.0) == "0");
  CHECK(format_sig(123456.789) == "123457");
  CHECK(format_sig(1e-07) == "1e-07");
  CHECK(format_sig(-2.5) == "-2.5");
  CHECK(format_sig(1.0 / 3.0) == "0.333333");
  CHECK(format_sig(1.0 / 3.0, 3) == "0.333");
  CHECK(format_sig(100.0, 17) == "100");
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(median({7.0}) == 7.0);
}

TEST_CASE("mix_seed and Rng determinism") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(1, 3));
  CHECK(mix_seed(1, 2) != mix_seed(2, 2));

  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    double ga = a.gaussian(), gb = b.gaussian(), gc = c.gaussian();
    all_equal = all_equal && (ga == gb);
    any_diff = any_diff || (ga != gc);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("Rng gaussian moments") {
  Rng rng(7);
  const int n = 200000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    double g = rng.gaussian();
    sum += g;
    sumsq += g * g;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("Rng uniform stays inside (0,1)") {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("Date helpers") {
  Date d = Date::parse("2020-01-03");
  CHECK(d.str() == "2020-01-03");
  CHECK(d.weekday() == 5);  // Friday
  CHECK(Date{1970, 1, 1}.serial() == 0);
  CHECK(Date{1970, 1, 1}.weekday() == 4);  // Thursday
  CHECK(Date::from_serial(d.serial()).str() == "2020-01-03");
  CHECK(d.next_weekday().str() == "2020-01-06");  // Monday
  CHECK(Date::parse("2020-02-28").next_weekday().str() == "2020-03-02");
  CHECK(Date::parse("2020-12-31").next_weekday().str() == "2021-01-01");
  CHECK(Date::parse("2020-01-06") < Date::parse("2020-01-07"));
  CHECK_THROWS_AS(Date::parse("garbage"), DataError);
  CHECK_THROWS_AS(Date::parse("2020-13-01"), DataError);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex(std::string("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string()) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

  std::string path = "test_common_sha.tmp";
  {
    std::ofstream f(path, std::ios::binary);
    f << "abc";
  }
  CHECK(sha256_file(path) == sha256_hex(std::string("abc")));
  std::remove(path.c_str());
}
