#pragma once

#include <complex>
#include <vector>

namespace nslab::fft {

// In-place 2D transforms on an n x n complex array, row-major with y outer.
// Forward uses the e^{-ik.x} kernel and divides by n^2, so that
// physical -> forward -> backward is the identity and the forward output
// holds the coefficients of u(x) = sum_k uhat(k) e^{i k.x}.
void forward2d(int n, std::complex<double>* data);
void backward2d(int n, std::complex<double>* data);

std::vector<std::complex<double>> forward2d(int n, const std::vector<std::complex<double>>& in);
std::vector<std::complex<double>> backward2d(int n, const std::vector<std::complex<double>>& in);

}  // namespace nslab::fft
