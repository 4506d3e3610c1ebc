// Szego-type ratio tr f(pi_r A pi_r) / tr pi_r for the 1-D lattice Schrodinger
// operator with V(k) = |k|^{1/2} and A = multiplication by a Gaussian bump.
#include <cstdio>

#include "szlab/models.hpp"

int main() {
  using namespace szlab;
  const auto m = build_lattice_schrodinger(1, 0.5, 300, [](const double* c) { return std::exp(-c[0] * c[0] / 400.0); });
  const auto fam = spectral_family(m);
  std::printf("%6s %8s %12s %12s\n", "r", "tr pi_r", "f = x", "f = x^2");
  for (double r : {4.0, 6.0, 8.0, 12.0, 16.0}) {
    const double a = szego_ratio(m, fam, [](double x) { return x; }, r);
    const double b = szego_ratio(m, fam, [](double x) { return x * x; }, r);
    std::printf("%6.1f %8zu %12.6f %12.6f\n", r, fam.count(r), a, b);
  }
}
