#include "fanrecon/simulate.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fanrecon/errors.hpp"

namespace fanrecon {

namespace {

double parse_number(std::string_view text, const char* field) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty())
        throw Error(ErrorCode::invalid_argument, "bad number '" + std::string(text) + "'", field);
    return value;
}

int parse_int(std::string_view text, const char* field) {
    int value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty())
        throw Error(ErrorCode::invalid_argument, "bad integer '" + std::string(text) + "'", field);
    return value;
}

struct Ellipse {
    double intensity, a, b, x0, y0, phi_deg;
};

// Toft's modified Shepp-Logan contrast values.
constexpr std::array<Ellipse, 10> kSheppLogan{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

}  // namespace

void validate(const NoiseSpec& spec) {
    if (spec.model == NoiseModel::poisson && !(spec.i0 > 0.0 && std::isfinite(spec.i0)))
        throw Error(ErrorCode::invalid_argument, "i0 must be positive", "i0");
    if (spec.model == NoiseModel::gaussian && !(spec.sigma >= 0.0 && std::isfinite(spec.sigma)))
        throw Error(ErrorCode::invalid_argument, "sigma must be non-negative", "sigma");
}

NoiseSpec parse_noise(std::string_view text, std::uint64_t seed) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw Error(ErrorCode::invalid_argument,
                    "noise must be poisson:I0 or gauss:SIGMA, got '" + std::string(text) + "'",
                    "noise");
    const auto kind = text.substr(0, colon);
    const auto value = text.substr(colon + 1);
    NoiseSpec spec;
    spec.seed = seed;
    if (kind == "poisson") {
        spec.model = NoiseModel::poisson;
        spec.i0 = parse_number(value, "noise");
    } else if (kind == "gauss" || kind == "gaussian") {
        spec.model = NoiseModel::gaussian;
        spec.sigma = parse_number(value, "noise");
    } else {
        throw Error(ErrorCode::invalid_argument, "unknown noise model '" + std::string(kind) + "'",
                    "noise");
    }
    validate(spec);
    return spec;
}

std::string to_string(const NoiseSpec& spec) {
    char buf[64];
    if (spec.model == NoiseModel::poisson) {
        const auto r = std::to_chars(buf, buf + sizeof buf, spec.i0);
        return "poisson:" + std::string(buf, r.ptr);
    }
    const auto r = std::to_chars(buf, buf + sizeof buf, spec.sigma);
    return "gauss:" + std::string(buf, r.ptr);
}

Sinogram synthesize_sinogram(const SparseSystemMatrix& a, const ImageGrid& phantom, int threads) {
    return forward_project(a, phantom, threads);
}

Sinogram add_noise(const Sinogram& p, const NoiseSpec& spec) {
    validate(spec);
    Sinogram out = p;
    std::mt19937_64 rng(spec.seed);
    auto values = out.values();
    if (spec.model == NoiseModel::gaussian) {
        if (spec.sigma == 0.0) return out;
        std::normal_distribution<double> gauss(0.0, spec.sigma);
        for (double& v : values) v += gauss(rng);
        return out;
    }
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!(values[i] >= 0.0))
            throw Error(ErrorCode::domain,
                        "poisson noise needs non-negative line integrals; value " +
                            std::to_string(values[i]) + " at index " + std::to_string(i));
    for (double& v : values) {
        std::poisson_distribution<long long> counts(spec.i0 * std::exp(-v));
        const long long k = counts(rng);
        v = -std::log(static_cast<double>(std::max<long long>(k, 1)) / spec.i0);
    }
    return out;
}

PixelMask roi_mask(const PixelGrid& grid, const RoiRect& roi) {
    if (!roi.inside(grid.nx, grid.ny))
        throw Error(ErrorCode::out_of_range,
                    "ROI " + std::to_string(roi.row0) + "," + std::to_string(roi.col0) + "," +
                        std::to_string(roi.rows) + "," + std::to_string(roi.cols) +
                        " is empty or outside the " + std::to_string(grid.nx) + "x" +
                        std::to_string(grid.ny) + " grid",
                    "roi");
    PixelMask mask(grid.nx, grid.ny);
    for (int r = roi.row0; r < roi.row0 + roi.rows; ++r)
        for (int c = roi.col0; c < roi.col0 + roi.cols; ++c)
            mask.set(static_cast<std::size_t>(r) * grid.nx + c);
    return mask;
}

RoiRect parse_roi(std::string_view text) {
    std::array<int, 4> parts{};
    std::size_t start = 0;
    for (int k = 0; k < 4; ++k) {
        const auto comma = text.find(',', start);
        if ((k < 3) == (comma == std::string_view::npos))
            throw Error(ErrorCode::invalid_argument,
                        "ROI must be row,col,height,width, got '" + std::string(text) + "'", "roi");
        const auto piece = text.substr(start, k < 3 ? comma - start : std::string_view::npos);
        parts[k] = parse_int(piece, "roi");
        start = comma + 1;
    }
    return {parts[0], parts[1], parts[2], parts[3]};
}

ImageGrid disk_phantom(int nx, int ny, double radius, double value) {
    const PixelGrid grid{nx, ny, 1.0};
    ImageGrid img(nx, ny);
    for (int r = 0; r < ny; ++r)
        for (int c = 0; c < nx; ++c) {
            const Point2 p = grid.pixel_center(r, c);
            if (p.x * p.x + p.y * p.y <= radius * radius) img.at(r, c) = value;
        }
    return img;
}

ImageGrid shepp_logan(int nx, int ny) {
    ImageGrid img(nx, ny);
    for (int r = 0; r < ny; ++r) {
        const double y = (0.5 * (ny - 1) - r) / (0.5 * ny);
        for (int c = 0; c < nx; ++c) {
            const double x = (c - 0.5 * (nx - 1)) / (0.5 * nx);
            double v = 0.0;
            for (const Ellipse& e : kSheppLogan) {
                const double phi = e.phi_deg * std::numbers::pi / 180.0;
                const double dx = x - e.x0;
                const double dy = y - e.y0;
                const double xr = dx * std::cos(phi) + dy * std::sin(phi);
                const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
                if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) v += e.intensity;
            }
            img.at(r, c) = v;
        }
    }
    return img;
}

}  // namespace fanrecon
