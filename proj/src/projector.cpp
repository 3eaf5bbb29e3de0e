#include "fanrecon/projector.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <omp.h>

#include "fanrecon/errors.hpp"

namespace fanrecon {

namespace {

// Clipping slivers below this fraction of a pixel area are rounding noise.
constexpr double kMinAreaFraction = 1e-12;

// Merges duplicate pixels (possible only through rounding at corners) and
// sorts by pixel index.
void sort_and_merge(std::vector<RayHit>& hits) {
    std::stable_sort(hits.begin(), hits.end(),
                     [](const RayHit& a, const RayHit& b) { return a.pixel < b.pixel; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (out > 0 && hits[out - 1].pixel == hits[i].pixel)
            hits[out - 1].weight += hits[i].weight;
        else
            hits[out++] = hits[i];
    }
    hits.resize(out);
}

// Plane crossings along one axis, in increasing t, strictly inside (tmin, tmax).
void axis_crossings(double origin, double dir, double lo, double step, int count, double tmin,
                    double tmax, std::vector<double>& out) {
    out.clear();
    if (dir == 0.0) return;
    if (dir > 0.0) {
        for (int i = 0; i <= count; ++i) {
            const double t = (lo + i * step - origin) / dir;
            if (t > tmin && t < tmax) out.push_back(t);
        }
    } else {
        for (int i = count; i >= 0; --i) {
            const double t = (lo + i * step - origin) / dir;
            if (t > tmin && t < tmax) out.push_back(t);
        }
    }
}

// Convex polygon with a fixed vertex budget; every clip adds at most one vertex.
struct Polygon {
    std::array<Point2, 24> v{};
    int n = 0;

    double area() const {
        double twice = 0.0;
        for (int i = 0; i < n; ++i) twice += cross(v[i], v[(i + 1) % n]);
        return 0.5 * std::abs(twice);
    }
};

Polygon rectangle(double x0, double y0, double x1, double y1) {
    Polygon p;
    p.v[0] = {x0, y0};
    p.v[1] = {x1, y0};
    p.v[2] = {x1, y1};
    p.v[3] = {x0, y1};
    p.n = 4;
    return p;
}

// Keeps the part of `in` where a*x + b*y + c >= 0.
Polygon clip(const Polygon& in, double a, double b, double c) {
    Polygon out;
    if (in.n == 0) return out;
    for (int i = 0; i < in.n; ++i) {
        const Point2 p = in.v[i];
        const Point2 q = in.v[(i + 1) % in.n];
        const double fp = a * p.x + b * p.y + c;
        const double fq = a * q.x + b * q.y + c;
        if (fp >= 0.0) out.v[out.n++] = p;
        if ((fp >= 0.0) != (fq >= 0.0)) {
            const double s = fp / (fp - fq);
            out.v[out.n++] = {p.x + s * (q.x - p.x), p.y + s * (q.y - p.y)};
        }
    }
    if (out.n < 3) out.n = 0;
    return out;
}

// Half-plane {P : cross(dir, P - origin) * sign >= 0} in a*x + b*y + c form.
std::array<double, 3> side_of_line(Point2 origin, Point2 dir, double sign) {
    // cross(dir, P - o) = dir.x * (P.y - o.y) - dir.y * (P.x - o.x)
    return {-sign * dir.y, sign * dir.x, sign * (dir.y * origin.x - dir.x * origin.y)};
}

Point2 unit(Point2 a) {
    const double n = norm(a);
    return {a.x / n, a.y / n};
}

}  // namespace

std::string_view to_string(ProjectorMode mode) {
    return mode == ProjectorMode::line ? "line" : "area";
}

ProjectorMode parse_projector_mode(std::string_view text) {
    if (text == "line") return ProjectorMode::line;
    if (text == "area") return ProjectorMode::area;
    throw Error(ErrorCode::invalid_argument,
                "projector must be 'line' or 'area', got '" + std::string(text) + "'",
                "projector");
}

std::vector<RayHit> trace_ray_line(const PixelGrid& grid, Point2 src, Point2 dst) {
    const Point2 delta = dst - src;
    const double length = norm(delta);
    if (!(length > 0.0))
        throw Error(ErrorCode::invalid_argument, "ray endpoints must differ");
    const Point2 dir{delta.x / length, delta.y / length};

    // Clip the segment, parametrised by distance from src, to the grid box.
    double tmin = 0.0;
    double tmax = length;
    const double lo[2] = {grid.xmin(), grid.ymin()};
    const double hi[2] = {grid.xmax(), grid.ymax()};
    const double org[2] = {src.x, src.y};
    const double d[2] = {dir.x, dir.y};
    for (int axis = 0; axis < 2; ++axis) {
        if (d[axis] == 0.0) {
            if (org[axis] < lo[axis] || org[axis] > hi[axis]) return {};
            continue;
        }
        const double t0 = (lo[axis] - org[axis]) / d[axis];
        const double t1 = (hi[axis] - org[axis]) / d[axis];
        tmin = std::max(tmin, std::min(t0, t1));
        tmax = std::min(tmax, std::max(t0, t1));
    }
    if (!(tmax > tmin)) return {};

    std::vector<double> tx;
    std::vector<double> ty;
    tx.reserve(grid.nx + 1);
    ty.reserve(grid.ny + 1);
    axis_crossings(src.x, dir.x, grid.xmin(), grid.pixel_size, grid.nx, tmin, tmax, tx);
    axis_crossings(src.y, dir.y, grid.ymin(), grid.pixel_size, grid.ny, tmin, tmax, ty);

    std::vector<double> ts;
    ts.reserve(tx.size() + ty.size() + 2);
    ts.push_back(tmin);
    std::merge(tx.begin(), tx.end(), ty.begin(), ty.end(), std::back_inserter(ts));
    ts.push_back(tmax);

    std::vector<RayHit> hits;
    hits.reserve(ts.size());
    const double inv = 1.0 / grid.pixel_size;
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        const double chord = ts[k + 1] - ts[k];
        if (!(chord > 0.0)) continue;
        const double mid = 0.5 * (ts[k] + ts[k + 1]);
        const double px = src.x + mid * dir.x;
        const double py = src.y + mid * dir.y;
        const auto col = static_cast<long>(std::floor((px - grid.xmin()) * inv));
        const auto from_bottom = static_cast<long>(std::floor((py - grid.ymin()) * inv));
        const long row = grid.ny - 1 - from_bottom;
        if (col < 0 || col >= grid.nx || row < 0 || row >= grid.ny) continue;
        hits.push_back({static_cast<std::int32_t>(row * grid.nx + col), chord});
    }
    sort_and_merge(hits);
    return hits;
}

std::vector<RayHit> beam_weights_area(const FanBeamGeometry& g, const PixelGrid& grid, int view,
                                      int detector) {
    const Point2 s = source_position(g, view);
    const Point2 centre = detector_center(g, view, detector);
    const Point2 across = detector_direction(g, view);
    const double half = 0.5 * effective_pitch(g);
    const Point2 axis = unit(centre - s);
    const Point2 e1 = unit(centre - half * across - s);
    const Point2 e2 = unit(centre + half * across - s);

    // tan of each edge's angle from the beam axis; the strip width at depth t is t * spread.
    const double tan1 = cross(axis, e1) / dot(axis, e1);
    const double tan2 = cross(axis, e2) / dot(axis, e2);
    const double spread = std::abs(tan2 - tan1);
    const double orientation = cross(e1, e2);
    if (!(spread > 0.0) || orientation == 0.0 || !std::isfinite(spread))
        throw Error(ErrorCode::invalid_geometry,
                    "beam strip for detector " + std::to_string(detector) + " is degenerate",
                    "pitch");
    const double sign = orientation > 0.0 ? 1.0 : -1.0;

    const auto h1 = side_of_line(s, e1, sign);
    const auto h2 = side_of_line(s, e2, -sign);
    // In front of the source: dot(axis, P - s) >= 0.
    const std::array<double, 3> h3{axis.x, axis.y, -(axis.x * s.x + axis.y * s.y)};

    Polygon beam = rectangle(grid.xmin(), grid.ymin(), grid.xmax(), grid.ymax());
    beam = clip(beam, h1[0], h1[1], h1[2]);
    beam = clip(beam, h2[0], h2[1], h2[2]);
    beam = clip(beam, h3[0], h3[1], h3[2]);
    if (beam.n == 0) return {};

    double bx0 = beam.v[0].x, bx1 = beam.v[0].x;
    for (int i = 1; i < beam.n; ++i) {
        bx0 = std::min(bx0, beam.v[i].x);
        bx1 = std::max(bx1, beam.v[i].x);
    }
    const double ps = grid.pixel_size;
    const double min_area = kMinAreaFraction * ps * ps;
    const int c0 = std::clamp(static_cast<int>(std::floor((bx0 - grid.xmin()) / ps)), 0, grid.nx - 1);
    const int c1 = std::clamp(static_cast<int>(std::floor((bx1 - grid.xmin()) / ps)), 0, grid.nx - 1);

    std::vector<RayHit> hits;
    for (int col = c0; col <= c1; ++col) {
        const double x0 = grid.xmin() + col * ps;
        const double x1 = x0 + ps;
        Polygon slab = clip(beam, 1.0, 0.0, -x0);
        slab = clip(slab, -1.0, 0.0, x1);
        if (slab.n == 0) continue;
        double y0 = slab.v[0].y, y1 = slab.v[0].y;
        for (int i = 1; i < slab.n; ++i) {
            y0 = std::min(y0, slab.v[i].y);
            y1 = std::max(y1, slab.v[i].y);
        }
        const int b0 = std::clamp(static_cast<int>(std::floor((y0 - grid.ymin()) / ps)), 0, grid.ny - 1);
        const int b1 = std::clamp(static_cast<int>(std::floor((y1 - grid.ymin()) / ps)), 0, grid.ny - 1);
        for (int fb = b0; fb <= b1; ++fb) {
            const double py0 = grid.ymin() + fb * ps;
            Polygon cell = clip(slab, 0.0, 1.0, -py0);
            cell = clip(cell, 0.0, -1.0, py0 + ps);
            if (cell.n == 0) continue;
            const double area = cell.area();
            if (!(area > min_area)) continue;
            const int row = grid.ny - 1 - fb;
            const double depth = dot(grid.pixel_center(row, col) - s, axis);
            if (!(depth > 0.0)) continue;
            hits.push_back({static_cast<std::int32_t>(row * grid.nx + col), area / (depth * spread)});
        }
    }
    sort_and_merge(hits);
    return hits;
}

std::vector<RayHit> system_row(const FanBeamGeometry& g, ProjectorMode mode, int view,
                               int detector) {
    const PixelGrid grid = pixel_grid(g);
    if (mode == ProjectorMode::area) return beam_weights_area(g, grid, view, detector);

    const Point2 s = source_position(g, view);
    const Point2 d = detector_center(g, view, detector);
    const Point2 dir = unit(d - s);
    const double radius = 0.5 * std::hypot(grid.xmax() - grid.xmin(), grid.ymax() - grid.ymin());
    const double reach = std::max(norm(d - s), norm(s) + radius) + grid.pixel_size;
    return trace_ray_line(grid, s, s + reach * dir);
}

}  // namespace fanrecon
