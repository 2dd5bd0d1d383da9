// SPDX-License-Identifier: Apache-2.0
// Prints the SO-CFAR threshold table compiled into the detector.
#include <cstdio>

#include "isac/detect.hpp"

int main() {
  const isac::CfarParams windows[] = {{2, 2, 8, 4, 0.0}, {1, 1, 4, 2, 0.0}, {2, 2, 16, 8, 0.0}};
  const double pfas[] = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  std::printf("// gd, gv, td, tv, pfa, factor; 1e7 draws, seed 2025\n");
  for (auto w : windows) {
    for (double pfa : pfas) {
      w.pfa = pfa;
      const double f = isac::calibrate_so_cfar(w, 10'000'000, 2025);
      std::printf("{%d, %d, %d, %d, %.0e, %.17g},\n", w.guard_delay, w.guard_doppler, w.train_delay, w.train_doppler, pfa, f);
    }
  }
  std::printf("{-1, -1, -1, -1, 0.0, 0.0},  // sentinel\n");
  return 0;
}
