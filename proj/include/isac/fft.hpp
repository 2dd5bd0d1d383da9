// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <span>

namespace isac::fft {

// Unnormalized DFTs backed by FFTW (FFTW_ESTIMATE plans, cached per size).
//   forward:  X[k] = sum_n x[n] exp(-j 2 pi k n / N)
//   backward: x[n] = sum_k X[k] exp(+j 2 pi k n / N)
void forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);
void backward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);

}  // namespace isac::fft
