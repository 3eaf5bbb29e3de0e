#include "fanrecon/geometry.hpp"

#include <cmath>
#include <string>

#include "fanrecon/errors.hpp"

namespace fanrecon {

namespace {

void require(bool ok, const char* field, const std::string& what) {
    if (!ok) throw Error(ErrorCode::invalid_geometry, std::string(field) + " " + what, field);
}

void check_view(const FanBeamGeometry& g, int view) {
    if (view < 0 || view >= g.nv)
        throw Error(ErrorCode::out_of_range,
                    "view index " + std::to_string(view) + " outside [0, " +
                        std::to_string(g.nv) + ")");
}

}  // namespace

double norm(Point2 a) { return std::hypot(a.x, a.y); }

void validate(const FanBeamGeometry& g) {
    require(g.nd >= 1, "nd", "must be at least 1");
    require(g.nv >= 1, "nv", "must be at least 1");
    require(g.nx >= 1, "nx", "must be at least 1");
    require(g.ny >= 1, "ny", "must be at least 1");
    require(std::isfinite(g.sto) && g.sto > 0.0, "sto", "must be positive");
    require(std::isfinite(g.stdd) && g.stdd > 0.0, "std", "must be positive");
    require(std::isfinite(g.pixel_size) && g.pixel_size > 0.0, "pixel_size", "must be positive");
    if (g.pitch)
        require(std::isfinite(*g.pitch) && *g.pitch > 0.0, "pitch", "must be positive");
    require(std::isfinite(g.arc) && g.arc > 0.0 && g.arc <= 2.0 * std::numbers::pi, "arc",
            "must lie in (0, 2*pi]");
}

double default_pitch(const FanBeamGeometry& g) {
    return g.nx * g.pixel_size * (g.stdd / g.sto) / g.nd;
}

double effective_pitch(const FanBeamGeometry& g) { return g.pitch.value_or(default_pitch(g)); }

double view_angle(const FanBeamGeometry& g, int view) {
    check_view(g, view);
    return view * g.arc / g.nv;
}

Point2 source_position(const FanBeamGeometry& g, int view) {
    const double theta = view_angle(g, view);
    return {g.sto * std::cos(theta), g.sto * std::sin(theta)};
}

Point2 central_direction(const FanBeamGeometry& g, int view) {
    const double theta = view_angle(g, view);
    return {-std::cos(theta), -std::sin(theta)};
}

Point2 detector_direction(const FanBeamGeometry& g, int view) {
    const double theta = view_angle(g, view);
    return {-std::sin(theta), std::cos(theta)};
}

Point2 detector_center(const FanBeamGeometry& g, int view, int detector) {
    check_view(g, view);
    if (detector < 0 || detector >= g.nd)
        throw Error(ErrorCode::out_of_range,
                    "detector index " + std::to_string(detector) + " outside [0, " +
                        std::to_string(g.nd) + ")");
    const double offset = (detector - 0.5 * (g.nd - 1)) * effective_pitch(g);
    return source_position(g, view) + g.stdd * central_direction(g, view) +
           offset * detector_direction(g, view);
}

PixelGrid pixel_grid(const FanBeamGeometry& g) { return {g.nx, g.ny, g.pixel_size}; }

}  // namespace fanrecon
