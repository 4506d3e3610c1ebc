// Log-determinant of Toeplitz truncations of 2 + cos(theta) approaching the Szego limit.
#include <cstdio>

#include "szlab/toeplitz.hpp"

int main() {
  using namespace szlab;
  const CircleSymbol f([](double t) { return 2.0 + std::cos(t); }, "2+cos", true, true);
  const auto rows = convergence_table(f, nullptr, {8, 16, 32, 64, 128, 256});
  std::printf("%6s %14s %14s %12s\n", "n", "logdet/(n+1)", "limit", "gap");
  for (auto& r : rows) std::printf("%6ld %14.10f %14.10f %12.3e\n", r.n, r.value, r.limit, r.gap);
}
