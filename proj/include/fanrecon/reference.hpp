#pragma once

#include <cstdint>

#include "fanrecon/arrays.hpp"
#include "fanrecon/projector.hpp"
#include "fanrecon/recon.hpp"

// Single-threaded versions of the projection and SART kernels. They walk the
// row-major entries only and scatter where the parallel kernels gather, with
// the same per-pixel summation order, so the two must agree bitwise.
namespace fanrecon::reference {

Sinogram forward_project(const SparseSystemMatrix& a, const ImageGrid& x);
ImageGrid back_project(const SparseSystemMatrix& a, const Sinogram& r);
void sart_sweep(const SparseSystemMatrix& a, const Sinogram& p, ImageGrid& x,
                const SartParams& params, std::int64_t sweep = 0);
double residual_rms(const SparseSystemMatrix& a, const Sinogram& p, const ImageGrid& x);

}  // namespace fanrecon::reference
