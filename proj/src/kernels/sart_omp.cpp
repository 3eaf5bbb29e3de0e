#include <algorithm>
#include <cmath>

#include <omp.h>

#include "fanrecon/errors.hpp"
#include "fanrecon/projector.hpp"
#include "fanrecon/recon.hpp"

namespace fanrecon {

double residual_rms(const SparseSystemMatrix& a, const Sinogram& p, const ImageGrid& x,
                    int threads) {
    check_dimensions(a, p);
    const Sinogram ax = forward_project(a, x, threads);
    double sum = 0.0;
    const auto pv = p.values();
    const auto av = ax.values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const double d = pv[i] - av[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(pv.size()));
}

void sart_sweep(const SparseSystemMatrix& a, const Sinogram& p, ImageGrid& x,
                const SartParams& params, std::int64_t sweep, int threads) {
    check_dimensions(a, p);
    check_dimensions(a, x);
    if (threads < 1)
        throw Error(ErrorCode::invalid_argument, "thread count must be at least 1", "threads");
    validate(params);
    const int nd = a.nd();
    const double lambda = params.lambda;
    const bool clamp = params.nonneg_clamp;
    const auto pv = p.values();
    auto xv = x.values();
    std::vector<double> correction(nd);

    for (const int v : sweep_view_order(params, a.nv(), sweep)) {
        const std::size_t r0 = static_cast<std::size_t>(v) * nd;
#pragma omp parallel num_threads(threads)
        {
#pragma omp for schedule(static)
            for (int d = 0; d < nd; ++d) {
                const std::size_t i = r0 + d;
                const double rs = a.row_sum(i);
                if (!(rs > 0.0)) {
                    correction[d] = 0.0;
                    continue;
                }
                const auto px = a.row_pixels(i);
                const auto w = a.row_weights(i);
                double s = 0.0;
                for (std::size_t k = 0; k < px.size(); ++k) s += w[k] * xv[px[k]];
                correction[d] = (pv[i] - s) / rs;
            }

            const auto& vc = a.view_columns(v);
            const auto touched = static_cast<std::int64_t>(vc.pixels.size());
#pragma omp for schedule(static)
            for (std::int64_t k = 0; k < touched; ++k) {
                const double cs = vc.col_sums[k];
                if (!(cs > 0.0)) continue;
                double num = 0.0;
                for (auto e = vc.offsets[k]; e < vc.offsets[k + 1]; ++e)
                    num += vc.weights[e] * correction[vc.rows[e] - r0];
                const std::int32_t j = vc.pixels[k];
                double updated = xv[j] + lambda * num / cs;
                if (clamp) updated = std::max(updated, 0.0);
                xv[j] = updated;
            }
        }
    }
}

}  // namespace fanrecon
