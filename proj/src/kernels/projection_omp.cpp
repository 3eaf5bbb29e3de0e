#include <algorithm>
#include <cmath>

#include <omp.h>

#include "fanrecon/errors.hpp"
#include "fanrecon/projector.hpp"

namespace fanrecon {

namespace {

void check_threads(int threads) {
    if (threads < 1)
        throw Error(ErrorCode::invalid_argument, "thread count must be at least 1", "threads");
}

}  // namespace

Sinogram forward_project(const SparseSystemMatrix& a, const ImageGrid& x, int threads) {
    check_dimensions(a, x);
    check_threads(threads);
    Sinogram p(a.nd(), a.nv());
    const auto xv = x.values();
    auto pv = p.values();
    const auto rows = static_cast<std::int64_t>(a.row_count());
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t i = 0; i < rows; ++i) {
        const auto px = a.row_pixels(i);
        const auto w = a.row_weights(i);
        double s = 0.0;
        for (std::size_t k = 0; k < px.size(); ++k) s += w[k] * xv[px[k]];
        pv[i] = s;
    }
    return p;
}

// Pixel-parallel gather over the per-view columns. Each pixel accumulates its
// entries view by view and row by row, the same order as a row-major scatter.
ImageGrid back_project(const SparseSystemMatrix& a, const Sinogram& r, int threads) {
    check_dimensions(a, r);
    check_threads(threads);
    const int nx = a.geometry().nx;
    const int ny = a.geometry().ny;
    ImageGrid y(nx, ny);
    auto yv = y.values();
    const auto rv = r.values();
    const auto npix = static_cast<std::int64_t>(a.pixel_count());
    const std::int64_t chunks = std::max<std::int64_t>(1, std::min<std::int64_t>(npix, 4 * threads));

#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::int64_t c = 0; c < chunks; ++c) {
        const auto lo = static_cast<std::int32_t>(npix * c / chunks);
        const auto hi = static_cast<std::int32_t>(npix * (c + 1) / chunks);
        for (int v = 0; v < a.nv(); ++v) {
            const auto& vc = a.view_columns(v);
            auto k = static_cast<std::size_t>(
                std::lower_bound(vc.pixels.begin(), vc.pixels.end(), lo) - vc.pixels.begin());
            for (; k < vc.pixels.size() && vc.pixels[k] < hi; ++k) {
                double acc = yv[vc.pixels[k]];
                for (auto e = vc.offsets[k]; e < vc.offsets[k + 1]; ++e)
                    acc += vc.weights[e] * rv[vc.rows[e]];
                yv[vc.pixels[k]] = acc;
            }
        }
    }
    return y;
}

}  // namespace fanrecon
