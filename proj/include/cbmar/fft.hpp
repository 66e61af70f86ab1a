// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace cbmar {

std::size_t next_pow2(std::size_t n);

// In-place radix-2 FFT; a.size() must be a power of two. inverse=true applies
// the conjugate transform including the 1/N factor.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse);

}  // namespace cbmar
