// SPDX-License-Identifier: Apache-2.0
#include "isac/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "isac/error.hpp"

namespace isac::fft {

namespace {

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// Plans are created on scratch buffers and executed with fftw_execute_dft on
// the caller's memory; buffers must then share alignment, so we copy through
// FFTW-allocated scratch.
struct Plan {
  PlanPtr plan;
  fftw_complex* in = nullptr;
  fftw_complex* out = nullptr;
  std::size_t n = 0;
  ~Plan() {
    fftw_free(in);
    fftw_free(out);
  }
};

// FFTW planning is not thread-safe and plans execute on shared scratch.
std::mutex g_mutex;

Plan& plan_for(std::size_t n, int sign) {
  static std::map<std::pair<std::size_t, int>, std::unique_ptr<Plan>> cache;
  auto& slot = cache[{n, sign}];
  if (!slot) {
    auto p = std::make_unique<Plan>();
    p->n = n;
    p->in = fftw_alloc_complex(n);
    p->out = fftw_alloc_complex(n);
    p->plan.reset(fftw_plan_dft_1d(static_cast<int>(n), p->in, p->out, sign, FFTW_ESTIMATE));
    if (!p->plan) fail(ErrorKind::Data, "FFTW planning failed");
    slot = std::move(p);
  }
  return *slot;
}

void run(std::span<const std::complex<double>> in, std::span<std::complex<double>> out, int sign) {
  if (in.size() != out.size() || in.empty()) fail(ErrorKind::Validation, "fft: size mismatch");
  std::lock_guard lock(g_mutex);
  Plan& p = plan_for(in.size(), sign);
  std::copy(in.begin(), in.end(), reinterpret_cast<std::complex<double>*>(p.in));
  fftw_execute(p.plan.get());
  const auto* res = reinterpret_cast<const std::complex<double>*>(p.out);
  std::copy(res, res + p.n, out.begin());
}

}  // namespace

void forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
  run(in, out, FFTW_FORWARD);
}

void backward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
  run(in, out, FFTW_BACKWARD);
}

}  // namespace isac::fft
