#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include <omp.h>

#include "fanrecon/errors.hpp"
#include "fanrecon/projector.hpp"

namespace fanrecon {

namespace {

template <typename T>
std::size_t bytes_of(const std::vector<T>& v) {
    return v.capacity() * sizeof(T);
}

std::size_t view_bytes(const SparseSystemMatrix::ViewColumns& v) {
    return bytes_of(v.pixels) + bytes_of(v.offsets) + bytes_of(v.rows) + bytes_of(v.weights) +
           bytes_of(v.col_sums);
}

}  // namespace

class MatrixAssembler {
public:
    static SparseSystemMatrix start(const FanBeamGeometry& g, ProjectorMode mode,
                                    std::optional<PixelMask> roi) {
        SparseSystemMatrix a;
        a.geometry_ = g;
        a.mode_ = mode;
        a.roi_ = std::move(roi);
        a.row_offsets_.reserve(static_cast<std::size_t>(g.nd) * g.nv + 1);
        a.row_sums_.reserve(static_cast<std::size_t>(g.nd) * g.nv);
        a.views_.resize(g.nv);
        return a;
    }

    static void append_row(SparseSystemMatrix& a, const std::vector<RayHit>& hits) {
        double sum = 0.0;
        for (const RayHit& h : hits) {
            a.pixels_.push_back(h.pixel);
            a.weights_.push_back(h.weight);
            sum += h.weight;
        }
        a.row_offsets_.push_back(a.pixels_.size());
        a.row_sums_.push_back(sum);
    }

    // Pixel-major copy of one view block; entries for a pixel stay in row order.
    static void transpose_view(SparseSystemMatrix& a, int view, std::vector<std::int32_t>& counts) {
        const std::size_t nd = static_cast<std::size_t>(a.geometry_.nd);
        const std::size_t r0 = static_cast<std::size_t>(view) * nd;
        const std::size_t begin = a.row_offsets_[r0];
        const std::size_t end = a.row_offsets_[r0 + nd];
        if (end - begin > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
            throw Error(ErrorCode::resource_exhausted, "view block too large to index");

        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t e = begin; e < end; ++e) ++counts[a.pixels_[e]];

        auto& vc = a.views_[view];
        vc = {};
        std::vector<std::int32_t> slot(counts.size(), -1);
        std::int32_t running = 0;
        for (std::size_t j = 0; j < counts.size(); ++j) {
            if (counts[j] == 0) continue;
            slot[j] = static_cast<std::int32_t>(vc.pixels.size());
            vc.pixels.push_back(static_cast<std::int32_t>(j));
            vc.offsets.push_back(running);
            running += counts[j];
        }
        vc.offsets.push_back(running);
        vc.rows.resize(running);
        vc.weights.resize(running);
        vc.col_sums.assign(vc.pixels.size(), 0.0);

        std::vector<std::int32_t> cursor(vc.offsets.begin(), vc.offsets.end() - 1);
        for (std::size_t r = r0; r < r0 + nd; ++r) {
            for (std::size_t e = a.row_offsets_[r]; e < a.row_offsets_[r + 1]; ++e) {
                const std::int32_t k = slot[a.pixels_[e]];
                const std::int32_t at = cursor[k]++;
                vc.rows[at] = static_cast<std::int32_t>(r);
                vc.weights[at] = a.weights_[e];
                vc.col_sums[k] += a.weights_[e];
            }
        }
    }

    static void finish(SparseSystemMatrix& a, int threads) {
        const int nv = a.geometry_.nv;
        const std::size_t npix = a.pixel_count();
        std::exception_ptr failure;
#pragma omp parallel num_threads(threads)
        {
            std::vector<std::int32_t> counts(npix);
#pragma omp for schedule(dynamic)
            for (int v = 0; v < nv; ++v) {
                try {
                    transpose_view(a, v, counts);
                } catch (...) {
#pragma omp critical(fanrecon_transpose_error)
                    if (!failure) failure = std::current_exception();
                }
            }
        }
        if (failure) std::rethrow_exception(failure);
        a.memory_bytes_ = current_bytes(a);
    }

    static std::size_t current_bytes(const SparseSystemMatrix& a) {
        std::size_t total = bytes_of(a.row_offsets_) + bytes_of(a.pixels_) + bytes_of(a.weights_) +
                            bytes_of(a.row_sums_);
        for (const auto& v : a.views_) total += view_bytes(v);
        return total;
    }
};

std::vector<RayHit> SparseSystemMatrix::row(std::size_t r) const {
    std::vector<RayHit> out;
    const auto px = row_pixels(r);
    const auto w = row_weights(r);
    out.reserve(px.size());
    for (std::size_t k = 0; k < px.size(); ++k) out.push_back({px[k], w[k]});
    return out;
}

double SparseSystemMatrix::view_col_sum(int view, std::size_t pixel) const {
    if (view < 0 || view >= nv() || pixel >= pixel_count())
        throw Error(ErrorCode::out_of_range, "view or pixel index out of range");
    const auto& vc = views_[view];
    const auto it = std::lower_bound(vc.pixels.begin(), vc.pixels.end(),
                                     static_cast<std::int32_t>(pixel));
    if (it == vc.pixels.end() || *it != static_cast<std::int32_t>(pixel)) return 0.0;
    return vc.col_sums[static_cast<std::size_t>(it - vc.pixels.begin())];
}

std::vector<double> SparseSystemMatrix::view_col_sums_dense(int view) const {
    if (view < 0 || view >= nv()) throw Error(ErrorCode::out_of_range, "view index out of range");
    std::vector<double> out(pixel_count(), 0.0);
    const auto& vc = views_[view];
    for (std::size_t k = 0; k < vc.pixels.size(); ++k) out[vc.pixels[k]] = vc.col_sums[k];
    return out;
}

bool operator==(const SparseSystemMatrix& a, const SparseSystemMatrix& b) {
    if (!(a.geometry_ == b.geometry_) || a.mode_ != b.mode_ || a.roi_ != b.roi_ ||
        a.row_offsets_ != b.row_offsets_ || a.pixels_ != b.pixels_ || a.weights_ != b.weights_ ||
        a.row_sums_ != b.row_sums_ || a.views_.size() != b.views_.size())
        return false;
    for (std::size_t v = 0; v < a.views_.size(); ++v) {
        const auto& x = a.views_[v];
        const auto& y = b.views_[v];
        if (x.pixels != y.pixels || x.offsets != y.offsets || x.rows != y.rows ||
            x.weights != y.weights || x.col_sums != y.col_sums)
            return false;
    }
    return true;
}

std::size_t predicted_matrix_bytes(const FanBeamGeometry& g, ProjectorMode mode) {
    validate(g);
    const double rows = static_cast<double>(g.nd) * g.nv;
    const double npix = static_cast<double>(g.nx) * g.ny;
    double per_row = g.nx + g.ny;
    if (mode == ProjectorMode::area) {
        // Widest beam cross-section at the far side of the grid, in pixels.
        const double radius = 0.5 * g.pixel_size * std::hypot(g.nx, g.ny);
        const double half_span = 0.5 * g.nd * effective_pitch(g);
        const double obliquity = 1.0 + (half_span * half_span) / (g.stdd * g.stdd);
        const double width = effective_pitch(g) * (g.sto + radius) / g.stdd * obliquity;
        per_row *= std::ceil(width / g.pixel_size) + 2.0;
    }
    const double entries = std::min(rows * per_row, rows * npix);
    // Row-major and pixel-major copies of each entry, plus row and view bookkeeping.
    const double bytes = entries * 2.0 * (sizeof(std::int32_t) + sizeof(double)) +
                         rows * (sizeof(std::size_t) + sizeof(double)) +
                         g.nv * npix * (2.0 * sizeof(std::int32_t) + sizeof(double));
    if (bytes > static_cast<double>(std::numeric_limits<std::size_t>::max()))
        return std::numeric_limits<std::size_t>::max();
    return static_cast<std::size_t>(bytes);
}

SparseSystemMatrix build_system_matrix(const FanBeamGeometry& g, const BuildOptions& options) {
    validate(g);
    if (options.threads < 1)
        throw Error(ErrorCode::invalid_argument, "thread count must be at least 1", "threads");
    if (options.roi) {
        if (options.roi->nx() != g.nx || options.roi->ny() != g.ny)
            throw Error(ErrorCode::dimension_mismatch, "ROI mask does not match the grid", "roi");
        if (options.roi->count() == 0)
            throw Error(ErrorCode::invalid_argument, "ROI mask is empty", "roi");
    }
    if (options.memory_cap_bytes != 0) {
        const std::size_t predicted = predicted_matrix_bytes(g, options.mode);
        if (predicted > options.memory_cap_bytes)
            throw Error(ErrorCode::resource_exhausted,
                        "system matrix needs about " + std::to_string(predicted) +
                            " bytes, cap is " + std::to_string(options.memory_cap_bytes),
                        "memory_cap_bytes");
    }
    const std::size_t npix = static_cast<std::size_t>(g.nx) * g.ny;
    if (npix > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
        throw Error(ErrorCode::resource_exhausted, "grid too large to index", "nx");
    if (static_cast<std::size_t>(g.nd) * g.nv >
        static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
        throw Error(ErrorCode::resource_exhausted, "too many rays to index", "nd");

    SparseSystemMatrix a = MatrixAssembler::start(g, options.mode, options.roi);
    const PixelMask* mask = options.roi ? &*options.roi : nullptr;

    std::vector<std::vector<RayHit>> block(g.nd);
    std::exception_ptr failure;
    for (int v = 0; v < g.nv; ++v) {
#pragma omp parallel for schedule(dynamic, 8) num_threads(options.threads)
        for (int d = 0; d < g.nd; ++d) {
            try {
                auto hits = system_row(g, options.mode, v, d);
                if (mask)
                    std::erase_if(hits, [mask](const RayHit& h) { return !mask->test(h.pixel); });
                block[d] = std::move(hits);
            } catch (...) {
#pragma omp critical(fanrecon_build_error)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
        for (const auto& hits : block) MatrixAssembler::append_row(a, hits);
        if (options.progress) options.progress(v + 1, MatrixAssembler::current_bytes(a));
    }
    MatrixAssembler::finish(a, options.threads);
    if (options.progress) options.progress(g.nv, a.memory_estimate());
    return a;
}

SparseSystemMatrix restrict_to_mask(const SparseSystemMatrix& a, const PixelMask& mask) {
    if (mask.nx() != a.geometry().nx || mask.ny() != a.geometry().ny)
        throw Error(ErrorCode::dimension_mismatch, "ROI mask does not match the grid", "roi");
    if (mask.count() == 0) throw Error(ErrorCode::invalid_argument, "ROI mask is empty", "roi");

    PixelMask combined = mask;
    if (a.roi())
        for (std::size_t j = 0; j < a.pixel_count(); ++j)
            combined.set(j, mask.test(j) && a.roi()->test(j));

    SparseSystemMatrix out = MatrixAssembler::start(a.geometry(), a.mode(), combined);
    std::vector<RayHit> hits;
    for (std::size_t r = 0; r < a.row_count(); ++r) {
        hits.clear();
        const auto px = a.row_pixels(r);
        const auto w = a.row_weights(r);
        for (std::size_t k = 0; k < px.size(); ++k)
            if (combined.test(px[k])) hits.push_back({px[k], w[k]});
        MatrixAssembler::append_row(out, hits);
    }
    MatrixAssembler::finish(out, 1);
    return out;
}

void check_dimensions(const SparseSystemMatrix& a, const ImageGrid& x) {
    if (x.nx() != a.geometry().nx || x.ny() != a.geometry().ny)
        throw Error(ErrorCode::dimension_mismatch,
                    "image is " + std::to_string(x.nx()) + "x" + std::to_string(x.ny()) +
                        ", matrix expects " + std::to_string(a.geometry().nx) + "x" +
                        std::to_string(a.geometry().ny));
}

void check_dimensions(const SparseSystemMatrix& a, const Sinogram& p) {
    if (p.nd() != a.nd() || p.nv() != a.nv())
        throw Error(ErrorCode::dimension_mismatch,
                    "sinogram is " + std::to_string(p.nd()) + "x" + std::to_string(p.nv()) +
                        ", matrix expects " + std::to_string(a.nd()) + "x" +
                        std::to_string(a.nv()));
}

}  // namespace fanrecon
