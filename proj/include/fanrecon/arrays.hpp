#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fanrecon {

/// Dense row-major image; row 0 is the top row.
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(int nx, int ny, double fill = 0.0);
    ImageGrid(int nx, int ny, std::vector<double> values);

    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& at(int row, int col) { return values_[index(row, col)]; }
    double at(int row, int col) const { return values_[index(row, col)]; }
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(nx_) +
               static_cast<std::size_t>(col);
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& storage() noexcept { return values_; }

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
    int nx_ = 0;
    int ny_ = 0;
    std::vector<double> values_;
};

/// Projection data ordered view-major, detector-minor.
class Sinogram {
public:
    Sinogram() = default;
    Sinogram(int nd, int nv, double fill = 0.0);
    Sinogram(int nd, int nv, std::vector<double> values);

    int nd() const noexcept { return nd_; }
    int nv() const noexcept { return nv_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& at(int view, int detector) { return values_[index(view, detector)]; }
    double at(int view, int detector) const { return values_[index(view, detector)]; }
    std::size_t index(int view, int detector) const noexcept {
        return static_cast<std::size_t>(view) * static_cast<std::size_t>(nd_) +
               static_cast<std::size_t>(detector);
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const Sinogram&, const Sinogram&) = default;

private:
    int nd_ = 0;
    int nv_ = 0;
    std::vector<double> values_;
};

/// Axis-aligned pixel rectangle.
struct RoiRect {
    int row0 = 0;
    int col0 = 0;
    int rows = 0;
    int cols = 0;

    bool contains(int row, int col) const noexcept {
        return row >= row0 && row < row0 + rows && col >= col0 && col < col0 + cols;
    }
    bool inside(int nx, int ny) const noexcept {
        return rows > 0 && cols > 0 && row0 >= 0 && col0 >= 0 &&
               row0 + rows <= ny && col0 + cols <= nx;
    }
    std::size_t area() const noexcept {
        return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    }

    friend bool operator==(const RoiRect&, const RoiRect&) = default;
};

/// Per-pixel boolean mask over an nx by ny grid.
class PixelMask {
public:
    PixelMask() = default;
    PixelMask(int nx, int ny, bool fill = false);

    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    bool test(std::size_t pixel) const noexcept { return bits_[pixel] != 0; }
    void set(std::size_t pixel, bool on = true) noexcept { bits_[pixel] = on ? 1 : 0; }
    std::size_t count() const noexcept;
    bool all() const noexcept { return count() == bits_.size(); }

    friend bool operator==(const PixelMask&, const PixelMask&) = default;

private:
    int nx_ = 0;
    int ny_ = 0;
    std::vector<unsigned char> bits_;
};

}  // namespace fanrecon
