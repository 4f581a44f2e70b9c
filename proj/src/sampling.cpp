#include "stabcert/sampling.hpp"

#include <stdexcept>

namespace stabcert {

namespace {
constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
}

double van_der_corput(unsigned long long k, unsigned base) {
  double x = 0.0;
  double inv = 1.0 / base;
  double f = inv;
  while (k > 0) {
    x += static_cast<double>(k % base) * f;
    k /= base;
    f *= inv;
  }
  return x;
}

std::vector<std::vector<double>> halton_box(std::size_t count,
                                            std::span<const double> center,
                                            std::span<const double> half_widths) {
  std::size_t d = center.size();
  if (half_widths.size() != d)
    throw std::invalid_argument("halton_box: center/half_widths size mismatch");
  if (d > std::size(kPrimes))
    throw std::invalid_argument("halton_box: dimension exceeds prime table");
  std::vector<std::vector<double>> pts(count, std::vector<double>(d));
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t j = 0; j < d; ++j) {
      double u = van_der_corput(k + 1, kPrimes[j]);  // (0,1)
      pts[k][j] = center[j] + (2.0 * u - 1.0) * half_widths[j];
    }
  return pts;
}

}  // namespace stabcert
