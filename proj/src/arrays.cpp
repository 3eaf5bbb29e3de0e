#include "fanrecon/arrays.hpp"

#include <algorithm>
#include <string>

#include "fanrecon/errors.hpp"

namespace fanrecon {

namespace {

std::size_t checked_size(int a, int b, const char* what) {
    if (a < 0 || b < 0)
        throw Error(ErrorCode::invalid_argument, std::string(what) + " dimensions must be non-negative");
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(b);
}

}  // namespace

ImageGrid::ImageGrid(int nx, int ny, double fill)
    : nx_(nx), ny_(ny), values_(checked_size(nx, ny, "image"), fill) {}

ImageGrid::ImageGrid(int nx, int ny, std::vector<double> values)
    : nx_(nx), ny_(ny), values_(std::move(values)) {
    if (values_.size() != checked_size(nx, ny, "image"))
        throw Error(ErrorCode::dimension_mismatch,
                    "image holds " + std::to_string(values_.size()) + " values, expected " +
                        std::to_string(static_cast<std::size_t>(nx) * ny));
}

Sinogram::Sinogram(int nd, int nv, double fill)
    : nd_(nd), nv_(nv), values_(checked_size(nd, nv, "sinogram"), fill) {}

Sinogram::Sinogram(int nd, int nv, std::vector<double> values)
    : nd_(nd), nv_(nv), values_(std::move(values)) {
    if (values_.size() != checked_size(nd, nv, "sinogram"))
        throw Error(ErrorCode::dimension_mismatch,
                    "sinogram holds " + std::to_string(values_.size()) + " values, expected " +
                        std::to_string(static_cast<std::size_t>(nd) * nv));
}

PixelMask::PixelMask(int nx, int ny, bool fill)
    : nx_(nx), ny_(ny), bits_(checked_size(nx, ny, "mask"), fill ? 1 : 0) {}

std::size_t PixelMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::out_of_range: return "out_of_range";
        case ErrorCode::invalid_geometry: return "invalid_geometry";
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::format: return "format";
        case ErrorCode::io: return "io";
        case ErrorCode::domain: return "domain";
        case ErrorCode::resource_exhausted: return "resource_exhausted";
        case ErrorCode::invalid_state: return "invalid_state";
        case ErrorCode::not_implemented: return "not_implemented";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::conflict: return "conflict";
    }
    return "unknown";
}

}  // namespace fanrecon
