#include "optexact/exactmath.hpp"

#include <cctype>
#include <cstdlib>
#include <stdexcept>

namespace optexact {

namespace {

BigRat pow10(long long e) {
  BigInt p = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(e < 0 ? -e : e));
  return e < 0 ? BigRat(1, p) : BigRat(p);
}

// boost::multiprecision interprets a leading '0' in string constructors as an
// octal prefix; digit strings taken from decimal literals must be normalised
// before conversion.
BigInt decimal_digits_to_int(const std::string& digits) {
  const std::size_t first = digits.find_first_not_of('0');
  if (first == std::string::npos) return BigInt(0);
  return BigInt(digits.substr(first));
}

BigInt parse_integer(const std::string& text) {
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    negative = text[pos] == '-';
    ++pos;
  }
  if (pos == text.size()) throw std::invalid_argument("malformed integer literal: " + text);
  for (std::size_t i = pos; i < text.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(text[i])))
      throw std::invalid_argument("malformed integer literal: " + text);
  BigInt value = decimal_digits_to_int(text.substr(pos));
  return negative ? BigInt(-value) : value;
}

}  // namespace

BigRat parse_decimal(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty numeric literal");

  if (auto slash = text.find('/'); slash != std::string::npos) {
    const std::string num = text.substr(0, slash);
    const std::string den = text.substr(slash + 1);
    if (num.empty() || den.empty())
      throw std::invalid_argument("malformed rational literal: " + text);
    const BigInt n = parse_integer(num);
    const BigInt d = parse_integer(den);
    if (d == 0) throw std::invalid_argument("zero denominator: " + text);
    return BigRat(n, d);
  }

  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    negative = text[pos] == '-';
    ++pos;
  }

  std::string digits;
  long long scale = 0;
  bool seen_digit = false, seen_point = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      if (seen_point) ++scale;
      seen_digit = true;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw std::invalid_argument("malformed numeric literal: " + text);

  long long exponent = 0;
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    ++pos;
    const std::string tail = text.substr(pos);
    if (tail.empty()) throw std::invalid_argument("malformed exponent: " + text);
    char* end = nullptr;
    exponent = std::strtoll(tail.c_str(), &end, 10);
    if (end == tail.c_str() || *end != '\0')
      throw std::invalid_argument("malformed exponent: " + text);
    pos = text.size();
  }
  if (pos != text.size()) throw std::invalid_argument("malformed numeric literal: " + text);

  BigRat value(decimal_digits_to_int(digits));
  value *= pow10(exponent - scale);
  return negative ? -value : value;
}

std::string rational_string(const BigRat& v) {
  const BigInt num = boost::multiprecision::numerator(v);
  const BigInt den = boost::multiprecision::denominator(v);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double to_double(const BigRat& v) { return v.convert_to<double>(); }

BigInt floor_div(const BigInt& num, const BigInt& den) {
  BigInt q = num / den;
  if (num % den != 0 && ((num < 0) != (den < 0))) --q;
  return q;
}

BinomialTable::BinomialTable(int max_n) : max_n_(max_n), zero_(0) {
  if (max_n < 0) throw std::invalid_argument("binomial table size must be non-negative");
  rows_.resize(static_cast<std::size_t>(max_n) + 1);
  for (int n = 0; n <= max_n; ++n) {
    auto& row = rows_[static_cast<std::size_t>(n)];
    row.resize(static_cast<std::size_t>(n) + 1);
    row.front() = 1;
    row.back() = 1;
    for (int k = 1; k < n; ++k)
      row[static_cast<std::size_t>(k)] =
          rows_[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(k - 1)] +
          rows_[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(k)];
  }
}

const BigInt& BinomialTable::operator()(int n, int k) const {
  if (n < 0 || n > max_n_ || k < 0 || k > n) return zero_;
  return rows_[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
}

}  // namespace optexact
