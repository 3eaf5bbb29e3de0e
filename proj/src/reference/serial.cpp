#include <algorithm>
#include <cmath>

#include "fanrecon/reference.hpp"

namespace fanrecon::reference {

Sinogram forward_project(const SparseSystemMatrix& a, const ImageGrid& x) {
    check_dimensions(a, x);
    Sinogram p(a.nd(), a.nv());
    for (std::size_t i = 0; i < a.row_count(); ++i) {
        const auto px = a.row_pixels(i);
        const auto w = a.row_weights(i);
        double s = 0.0;
        for (std::size_t k = 0; k < px.size(); ++k) s += w[k] * x.values()[px[k]];
        p.values()[i] = s;
    }
    return p;
}

ImageGrid back_project(const SparseSystemMatrix& a, const Sinogram& r) {
    check_dimensions(a, r);
    ImageGrid y(a.geometry().nx, a.geometry().ny);
    auto yv = y.values();
    for (std::size_t i = 0; i < a.row_count(); ++i) {
        const auto px = a.row_pixels(i);
        const auto w = a.row_weights(i);
        for (std::size_t k = 0; k < px.size(); ++k) yv[px[k]] += w[k] * r.values()[i];
    }
    return y;
}

void sart_sweep(const SparseSystemMatrix& a, const Sinogram& p, ImageGrid& x,
                const SartParams& params, std::int64_t sweep) {
    check_dimensions(a, p);
    check_dimensions(a, x);
    validate(params);
    const int nd = a.nd();
    const std::size_t npix = a.pixel_count();
    auto xv = x.values();
    std::vector<double> correction(nd);
    std::vector<double> numerator(npix);
    std::vector<double> column(npix);

    for (const int v : sweep_view_order(params, a.nv(), sweep)) {
        const std::size_t r0 = static_cast<std::size_t>(v) * nd;
        for (int d = 0; d < nd; ++d) {
            const std::size_t i = r0 + d;
            correction[d] = 0.0;
            if (!(a.row_sum(i) > 0.0)) continue;
            const auto px = a.row_pixels(i);
            const auto w = a.row_weights(i);
            double s = 0.0;
            for (std::size_t k = 0; k < px.size(); ++k) s += w[k] * xv[px[k]];
            correction[d] = (p.values()[i] - s) / a.row_sum(i);
        }

        std::fill(numerator.begin(), numerator.end(), 0.0);
        std::fill(column.begin(), column.end(), 0.0);
        for (int d = 0; d < nd; ++d) {
            const auto px = a.row_pixels(r0 + d);
            const auto w = a.row_weights(r0 + d);
            for (std::size_t k = 0; k < px.size(); ++k) {
                numerator[px[k]] += w[k] * correction[d];
                column[px[k]] += w[k];
            }
        }
        for (std::size_t j = 0; j < npix; ++j) {
            if (!(column[j] > 0.0)) continue;
            double updated = xv[j] + params.lambda * numerator[j] / column[j];
            if (params.nonneg_clamp) updated = std::max(updated, 0.0);
            xv[j] = updated;
        }
    }
}

double residual_rms(const SparseSystemMatrix& a, const Sinogram& p, const ImageGrid& x) {
    const Sinogram ax = reference::forward_project(a, x);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p.values()[i] - ax.values()[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(p.size()));
}

}  // namespace fanrecon::reference
