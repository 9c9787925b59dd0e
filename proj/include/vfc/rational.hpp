#ifndef VFC_RATIONAL_HPP
#define VFC_RATIONAL_HPP

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <vector>

namespace vfc {

using Rat = mpq_class;
using Int = mpz_class;

inline Rat rat_from_string(const std::string& s) {
  Rat q;
  if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational: " + s);
  q.canonicalize();
  return q;
}

// mpq_class(num, den) does not canonicalize and GMP comparisons assume
// canonical form; route all num/den construction through here.
inline Rat make_rat(long num, long den) {
  Rat q(num, den);
  q.canonicalize();
  return q;
}

inline std::string rat_to_string(const Rat& q) { return q.get_str(); }

inline double rat_to_double(const Rat& q) { return q.get_d(); }

inline Rat dot(const std::vector<Int>& a, const std::vector<Rat>& x) {
  Rat s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += Rat(a[i]) * x[i];
  return s;
}

// Divides out the gcd of the entries; the zero vector is left alone.
inline void make_primitive(std::vector<Int>& v) {
  Int g = 0;
  for (const Int& e : v) g = gcd(g, e);
  if (g == 0) return;
  for (Int& e : v) e /= g;
}

}  // namespace vfc

#endif
