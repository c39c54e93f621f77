#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <vector>

namespace optexact {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// Parses a decimal literal such as "0.025", "2.5e-2" or "1/40" into an exact
// rational. Throws std::invalid_argument on malformed input.
BigRat parse_decimal(const std::string& text);

// Renders v as "num/den" in lowest terms ("num" when den == 1).
std::string rational_string(const BigRat& v);

double to_double(const BigRat& v);

// floor(num/den) for den > 0.
BigInt floor_div(const BigInt& num, const BigInt& den);

// Binomial coefficients C(n, k) for all 0 <= k <= n <= max_n, built once as a
// Pascal triangle so repeated lookups are exact and allocation-free.
class BinomialTable {
 public:
  explicit BinomialTable(int max_n);

  // C(n, k); zero outside 0 <= k <= n or when n exceeds the table size.
  const BigInt& operator()(int n, int k) const;

  int max_n() const { return max_n_; }

 private:
  int max_n_;
  std::vector<std::vector<BigInt>> rows_;
  BigInt zero_;
};

}  // namespace optexact
