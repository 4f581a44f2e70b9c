#ifndef STABCERT_SAMPLING_HPP
#define STABCERT_SAMPLING_HPP

#include <span>
#include <vector>

namespace stabcert {

/// k-th element (k >= 0) of the van der Corput sequence in the given base.
double van_der_corput(unsigned long long k, unsigned base);

/// First `count` Halton points in the axis-aligned box
/// [center - half_width, center + half_width]^d, one prime base per axis.
/// Deterministic; index 0 of the underlying sequence is skipped so no
/// point lands exactly on the box center.
std::vector<std::vector<double>> halton_box(std::size_t count,
                                            std::span<const double> center,
                                            std::span<const double> half_widths);

}  // namespace stabcert

#endif  // STABCERT_SAMPLING_HPP
