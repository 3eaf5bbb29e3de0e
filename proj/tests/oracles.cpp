#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

double clip_length(double xmin, double xmax, double ymin, double ymax, Point2 a, Point2 b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    double t0 = 0.0;
    double t1 = 1.0;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.x - xmin, xmax - a.x, a.y - ymin, ymax - a.y};
    for (int k = 0; k < 4; ++k) {
        if (p[k] == 0.0) {
            if (q[k] < 0.0) return 0.0;
            continue;
        }
        const double t = q[k] / p[k];
        if (p[k] < 0.0)
            t0 = std::max(t0, t);
        else
            t1 = std::min(t1, t);
    }
    if (t1 <= t0) return 0.0;
    return (t1 - t0) * std::hypot(dx, dy);
}

double clip_length(const PixelGrid& grid, Point2 a, Point2 b) {
    return clip_length(grid.xmin(), grid.xmax(), grid.ymin(), grid.ymax(), a, b);
}

double ray_clip_length(const PixelGrid& grid, Point2 origin, Point2 dir) {
    const double len = std::hypot(dir.x, dir.y);
    const double far = 4.0 * (std::hypot(origin.x, origin.y) + grid.xmax() - grid.xmin() +
                              grid.ymax() - grid.ymin());
    const Point2 end{origin.x + far * dir.x / len, origin.y + far * dir.y / len};
    return clip_length(grid, origin, end);
}

std::map<int, double> pixel_chords(const PixelGrid& grid, Point2 a, Point2 b) {
    std::map<int, double> out;
    const double ps = grid.pixel_size;
    for (int r = 0; r < grid.ny; ++r)
        for (int c = 0; c < grid.nx; ++c) {
            const double x0 = grid.xmin() + c * ps;
            const double y1 = grid.ymax() - r * ps;
            const double len = clip_length(x0, x0 + ps, y1 - ps, y1, a, b);
            if (len > 0.0) out[r * grid.nx + c] = len;
        }
    return out;
}

double area_weight_supersampled(const fanrecon::FanBeamGeometry& g, int view, int detector,
                                int row, int col, int n) {
    // Geometry rebuilt from the definitions rather than the library helpers.
    const double theta = view * g.arc / g.nv;
    const double pitch = g.pitch ? *g.pitch : g.nx * g.pixel_size * (g.stdd / g.sto) / g.nd;
    const Point2 s{g.sto * std::cos(theta), g.sto * std::sin(theta)};
    const Point2 u{-std::cos(theta), -std::sin(theta)};
    const Point2 v{-std::sin(theta), std::cos(theta)};
    const double off = (detector - 0.5 * (g.nd - 1)) * pitch;
    const auto det_at = [&](double o) {
        return Point2{s.x + g.stdd * u.x + o * v.x, s.y + g.stdd * u.y + o * v.y};
    };
    const Point2 dc = det_at(off);
    const double axis_angle = std::atan2(dc.y - s.y, dc.x - s.x);
    const auto rel_angle = [&](Point2 p) {
        double a = std::atan2(p.y - s.y, p.x - s.x) - axis_angle;
        while (a > M_PI) a -= 2 * M_PI;
        while (a < -M_PI) a += 2 * M_PI;
        return a;
    };
    const double a1 = rel_angle(det_at(off - 0.5 * pitch));
    const double a2 = rel_angle(det_at(off + 0.5 * pitch));
    const double lo = std::min(a1, a2);
    const double hi = std::max(a1, a2);

    const double ps = g.pixel_size;
    const double x0 = (-0.5 * g.nx + col) * ps;
    const double y1 = (0.5 * g.ny - row) * ps;
    int inside = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Point2 p{x0 + (j + 0.5) * ps / n, y1 - (i + 0.5) * ps / n};
            const double a = rel_angle(p);
            const double ahead = (p.x - s.x) * std::cos(axis_angle) + (p.y - s.y) * std::sin(axis_angle);
            if (ahead > 0.0 && a >= lo && a < hi) ++inside;
        }
    const double area = inside * (ps * ps) / (static_cast<double>(n) * n);
    const Point2 centre{x0 + 0.5 * ps, y1 - 0.5 * ps};
    const double depth = (centre.x - s.x) * std::cos(axis_angle) + (centre.y - s.y) * std::sin(axis_angle);
    const double spread = std::tan(hi) - std::tan(lo);
    return area / (depth * spread);
}

Dense densify(const fanrecon::SparseSystemMatrix& m) {
    Dense d;
    d.rows = m.row_count();
    d.cols = m.pixel_count();
    d.a.assign(d.rows * d.cols, 0.0);
    for (std::size_t i = 0; i < d.rows; ++i)
        for (const auto& h : m.row(i)) d.a[i * d.cols + h.pixel] = h.weight;
    return d;
}

std::vector<double> multiply(const Dense& d, const std::vector<double>& x) {
    std::vector<double> y(d.rows, 0.0);
    for (std::size_t i = 0; i < d.rows; ++i)
        for (std::size_t j = 0; j < d.cols; ++j) y[i] += d.at(i, j) * x[j];
    return y;
}

std::vector<double> multiply_transpose(const Dense& d, const std::vector<double>& r) {
    std::vector<double> y(d.cols, 0.0);
    for (std::size_t i = 0; i < d.rows; ++i)
        for (std::size_t j = 0; j < d.cols; ++j) y[j] += d.at(i, j) * r[i];
    return y;
}

void literal_sart_sweep(const Dense& d, int nd, int nv, const std::vector<double>& p,
                        std::vector<double>& x, double lambda) {
    for (int v = 0; v < nv; ++v) {
        std::vector<double> c(nd, 0.0);
        for (int k = 0; k < nd; ++k) {
            const std::size_t i = static_cast<std::size_t>(v) * nd + k;
            double rowsum = 0.0;
            double ax = 0.0;
            for (std::size_t l = 0; l < d.cols; ++l) {
                rowsum += d.at(i, l);
                ax += d.at(i, l) * x[l];
            }
            if (rowsum != 0.0) c[k] = (p[i] - ax) / rowsum;
        }
        for (std::size_t j = 0; j < d.cols; ++j) {
            double num = 0.0;
            double col = 0.0;
            for (int k = 0; k < nd; ++k) {
                const std::size_t i = static_cast<std::size_t>(v) * nd + k;
                num += d.at(i, j) * c[k];
                col += d.at(i, j);
            }
            if (col != 0.0) x[j] = x[j] + lambda * num / col;
        }
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace oracle
