// Monte Carlo volume of the unit ball of |(x,y,t)| = (|x,y|^4 + t^2)^{1/4} on H^1 and H^2.
#include <cstdio>
#include <cstdlib>

#include "szlab/phase_volume.hpp"

int main(int argc, char** argv) {
  using namespace szlab;
  MonteCarloPlan plan;
  plan.samples = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 2000000;
  plan.seed = 1;
  for (int n : {1, 2}) {
    const auto e = homogeneous_ball_volume(n, 1.0, plan);
    std::printf("n=%d  mc %.6f +- %.6f  radial %.6f\n", n, e.value, e.error, homogeneous_ball_volume_radial(n));
  }
}
