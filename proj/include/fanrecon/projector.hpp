#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fanrecon/arrays.hpp"
#include "fanrecon/geometry.hpp"

namespace fanrecon {

enum class ProjectorMode { line, area };

std::string_view to_string(ProjectorMode mode);
ProjectorMode parse_projector_mode(std::string_view text);

struct RayHit {
    std::int32_t pixel;
    double weight;

    friend bool operator==(const RayHit&, const RayHit&) = default;
};

/// Siddon traversal of the segment src -> dst.
///
/// Returns each crossed pixel once, sorted by pixel index, weighted by its
/// chord length. A segment running exactly along a pixel edge is credited to
/// the pixel on the +x / +y side of that edge; zero-length crossings are
/// dropped. A segment missing the grid yields an empty list.
std::vector<RayHit> trace_ray_line(const PixelGrid& grid, Point2 src, Point2 dst);

/// Area-integral weights for detector cell `detector` at `view`.
///
/// The beam is the wedge from the source through the two edges of the cell.
/// Each pixel weight is area(pixel ∩ beam) divided by the beam width measured
/// perpendicular to the beam's central ray at the pixel centre, which gives
/// the weight units of length, like a chord. Sorted by pixel index.
std::vector<RayHit> beam_weights_area(const FanBeamGeometry& g, const PixelGrid& grid, int view,
                                      int detector);

/// One system-matrix row. In line mode the ray runs from the source through
/// the detector cell centre and on past the far side of the grid, so a
/// detector line placed inside the object (STD < STO + radius) still sees
/// the whole path.
std::vector<RayHit> system_row(const FanBeamGeometry& g, ProjectorMode mode, int view,
                               int detector);

/// Immutable sparse system matrix, rows grouped by view.
///
/// Row r corresponds to view r / nd and detector r % nd. Alongside the
/// row-major entries each view keeps a pixel-major copy of its block, which
/// lets back projection gather per pixel instead of scattering per row.
class SparseSystemMatrix {
public:
    struct ViewColumns {
        std::vector<std::int32_t> pixels;     // touched pixels, ascending
        std::vector<std::int32_t> offsets;    // pixels.size() + 1
        std::vector<std::int32_t> rows;       // global row index, ascending per pixel
        std::vector<double> weights;
        std::vector<double> col_sums;         // aligned with pixels
    };

    SparseSystemMatrix() = default;

    const FanBeamGeometry& geometry() const noexcept { return geometry_; }
    PixelGrid grid() const noexcept { return pixel_grid(geometry_); }
    ProjectorMode mode() const noexcept { return mode_; }
    const std::optional<PixelMask>& roi() const noexcept { return roi_; }

    int nd() const noexcept { return geometry_.nd; }
    int nv() const noexcept { return geometry_.nv; }
    std::size_t row_count() const noexcept { return row_sums_.size(); }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(geometry_.nx) * static_cast<std::size_t>(geometry_.ny);
    }
    std::size_t entry_count() const noexcept { return weights_.size(); }

    std::span<const std::int32_t> row_pixels(std::size_t row) const noexcept {
        return {pixels_.data() + row_offsets_[row], pixels_.data() + row_offsets_[row + 1]};
    }
    std::span<const double> row_weights(std::size_t row) const noexcept {
        return {weights_.data() + row_offsets_[row], weights_.data() + row_offsets_[row + 1]};
    }
    std::vector<RayHit> row(std::size_t row) const;

    double row_sum(std::size_t row) const noexcept { return row_sums_[row]; }
    std::span<const double> row_sums() const noexcept { return row_sums_; }

    const ViewColumns& view_columns(int view) const noexcept { return views_[view]; }
    double view_col_sum(int view, std::size_t pixel) const;
    std::vector<double> view_col_sums_dense(int view) const;

    /// Bytes held by the matrix.
    std::size_t memory_estimate() const noexcept { return memory_bytes_; }

    friend bool operator==(const SparseSystemMatrix&, const SparseSystemMatrix&);

private:
    friend class MatrixAssembler;

    FanBeamGeometry geometry_;
    ProjectorMode mode_ = ProjectorMode::line;
    std::optional<PixelMask> roi_;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::int32_t> pixels_;
    std::vector<double> weights_;
    std::vector<double> row_sums_;
    std::vector<ViewColumns> views_;
    std::size_t memory_bytes_ = 0;
};

struct BuildOptions {
    ProjectorMode mode = ProjectorMode::line;
    std::optional<PixelMask> roi;
    int threads = 1;
    std::size_t memory_cap_bytes = 0;  // 0: unlimited
    /// Called after each view block is assembled with (views done, bytes so far).
    std::function<void(int, std::size_t)> progress;
};

/// Upper-bound estimate of the matrix footprint, computed before any allocation.
std::size_t predicted_matrix_bytes(const FanBeamGeometry& g, ProjectorMode mode);

/// Builds every row independently; the result is bitwise identical for any
/// thread count. Throws resource_exhausted when predicted_matrix_bytes
/// exceeds a non-zero memory cap.
SparseSystemMatrix build_system_matrix(const FanBeamGeometry& g, const BuildOptions& options);

/// Copy of `a` keeping only the entries whose pixel lies in `mask`.
SparseSystemMatrix restrict_to_mask(const SparseSystemMatrix& a, const PixelMask& mask);

Sinogram forward_project(const SparseSystemMatrix& a, const ImageGrid& x, int threads = 1);
ImageGrid back_project(const SparseSystemMatrix& a, const Sinogram& r, int threads = 1);

void check_dimensions(const SparseSystemMatrix& a, const ImageGrid& x);
void check_dimensions(const SparseSystemMatrix& a, const Sinogram& p);

}  // namespace fanrecon
