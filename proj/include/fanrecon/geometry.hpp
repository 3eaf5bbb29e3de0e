#pragma once

#include <numbers>
#include <optional>

namespace fanrecon {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double norm(Point2 a);

/// Circular-orbit fan-beam acquisition with a flat detector line.
///
/// The source sits at distance `sto` from the rotation centre; the detector
/// line is perpendicular to the central ray at distance `stdd` from the
/// source. Views are equally spaced over `arc` radians starting on +x.
/// Lengths are in pixel units unless `pixel_size` says otherwise.
struct FanBeamGeometry {
    int nd = 512;
    int nv = 64;
    int nx = 512;
    int ny = 512;
    double sto = 1024.0;
    double stdd = 1024.0;
    std::optional<double> pitch;  // unset: default_pitch()
    double pixel_size = 1.0;
    double arc = 2.0 * std::numbers::pi;

    friend bool operator==(const FanBeamGeometry&, const FanBeamGeometry&) = default;
};

/// Throws Error(invalid_geometry) naming the first field that breaks an invariant.
void validate(const FanBeamGeometry& g);

/// Pitch that makes the detector line span the magnified field of view.
double default_pitch(const FanBeamGeometry& g);
double effective_pitch(const FanBeamGeometry& g);

double view_angle(const FanBeamGeometry& g, int view);
Point2 source_position(const FanBeamGeometry& g, int view);
Point2 detector_center(const FanBeamGeometry& g, int view, int detector);

/// Unit vector from the source toward the rotation centre.
Point2 central_direction(const FanBeamGeometry& g, int view);
/// Unit vector along the detector line, in the direction of increasing detector index.
Point2 detector_direction(const FanBeamGeometry& g, int view);

/// Reconstruction grid centred on the origin; row 0 on top.
struct PixelGrid {
    int nx = 0;
    int ny = 0;
    double pixel_size = 1.0;

    double xmin() const noexcept { return -0.5 * nx * pixel_size; }
    double xmax() const noexcept { return 0.5 * nx * pixel_size; }
    double ymin() const noexcept { return -0.5 * ny * pixel_size; }
    double ymax() const noexcept { return 0.5 * ny * pixel_size; }
    int pixel_count() const noexcept { return nx * ny; }
    bool contains(int row, int col) const noexcept {
        return row >= 0 && row < ny && col >= 0 && col < nx;
    }
    Point2 pixel_center(int row, int col) const noexcept {
        return {(col - 0.5 * (nx - 1)) * pixel_size, (0.5 * (ny - 1) - row) * pixel_size};
    }

    friend bool operator==(const PixelGrid&, const PixelGrid&) = default;
};

PixelGrid pixel_grid(const FanBeamGeometry& g);

}  // namespace fanrecon
