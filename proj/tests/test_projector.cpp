#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "fanrecon/errors.hpp"
#include "fanrecon/projector.hpp"
#include "fanrecon/reference.hpp"
#include "fanrecon/simulate.hpp"
#include "oracles.hpp"

using namespace fanrecon;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

FanBeamGeometry small(int nd = 23, int nv = 9, int nx = 12, int ny = 10) {
    FanBeamGeometry g;
    g.nd = nd;
    g.nv = nv;
    g.nx = nx;
    g.ny = ny;
    g.sto = 40.0;
    g.stdd = 70.0;
    return g;
}

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("Siddon chords on random rays match independent clipping") {
    const PixelGrid grid{4, 4, 1.0};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int k = 0; k < 100; ++k) {
        const Point2 a{u(rng), u(rng)};
        const Point2 b{u(rng), u(rng)};
        const auto hits = trace_ray_line(grid, a, b);
        double sum = 0.0;
        for (const auto& h : hits) sum += h.weight;
        CHECK_THAT(sum, WithinAbs(oracle::clip_length(grid, a, b), 1e-9));

        const auto chords = oracle::pixel_chords(grid, a, b);
        std::map<int, double> got;
        for (const auto& h : hits) got[h.pixel] = h.weight;
        for (const auto& [p, len] : chords)
            if (len > 1e-9) CHECK_THAT(got[p], WithinAbs(len, 1e-9));
        for (const auto& [p, w] : got) CHECK_THAT(chords.contains(p) ? chords.at(p) : 0.0, WithinAbs(w, 1e-9));
    }
}

TEST_CASE("Siddon output is sorted, unique and positive") {
    const PixelGrid grid{16, 9, 0.7};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int k = 0; k < 200; ++k) {
        const auto hits = trace_ray_line(grid, {u(rng), u(rng)}, {u(rng), u(rng)});
        for (std::size_t i = 0; i < hits.size(); ++i) {
            CHECK(hits[i].weight > 0.0);
            if (i > 0) CHECK(hits[i - 1].pixel < hits[i].pixel);
        }
    }
}

TEST_CASE("a ray along a pixel edge goes to the +x / +y side") {
    const PixelGrid grid{4, 4, 1.0};
    // y = 0 separates rows 1 (above) and 2.
    const auto h = trace_ray_line(grid, {-5.0, 0.0}, {5.0, 0.0});
    REQUIRE(h.size() == 4);
    for (int c = 0; c < 4; ++c) {
        CHECK(h[c].pixel == 1 * 4 + c);
        CHECK_THAT(h[c].weight, WithinAbs(1.0, 1e-12));
    }
    // x = 0 separates columns 1 and 2 (right).
    const auto v = trace_ray_line(grid, {0.0, 5.0}, {0.0, -5.0});
    REQUIRE(v.size() == 4);
    for (int r = 0; r < 4; ++r) CHECK(v[r].pixel == r * 4 + 2);
    // Along the outer boundary: +x side of x = -2 is column 0.
    const auto edge = trace_ray_line(grid, {-2.0, -3.0}, {-2.0, 3.0});
    CHECK(edge.size() == 4);
}

TEST_CASE("Siddon degenerate cases") {
    const PixelGrid grid{4, 4, 1.0};
    CHECK(trace_ray_line(grid, {-5.0, 3.0}, {5.0, 3.0}).empty());
    CHECK(trace_ray_line(grid, {3.0, 3.0}, {5.0, 5.0}).empty());
    CHECK_THROWS_AS(trace_ray_line(grid, {1.0, 1.0}, {1.0, 1.0}), Error);
    // segment ending inside one pixel
    const auto inside = trace_ray_line(grid, {0.2, 0.2}, {0.6, 0.5});
    REQUIRE(inside.size() == 1);
    CHECK(inside[0].pixel == 1 * 4 + 2);
    CHECK_THAT(inside[0].weight, WithinAbs(0.5, 1e-12));
    // corner-to-corner diagonal: every chord sqrt(2)
    const auto diag = trace_ray_line(grid, {-2.0, -2.0}, {2.0, 2.0});
    REQUIRE(diag.size() == 4);
    for (const auto& h : diag) CHECK_THAT(h.weight, WithinAbs(std::sqrt(2.0), 1e-12));
}

TEST_CASE("line rows reach through the whole grid even with the detector inside it") {
    FanBeamGeometry g = small();
    g.stdd = g.sto;  // detector line through the isocentre
    const PixelGrid grid = pixel_grid(g);
    for (int v = 0; v < g.nv; ++v)
        for (int d = 0; d < g.nd; ++d) {
            const Point2 s = source_position(g, v);
            double sum = 0.0;
            for (const auto& h : system_row(g, ProjectorMode::line, v, d)) sum += h.weight;
            CHECK_THAT(sum, WithinAbs(oracle::ray_clip_length(grid, s, detector_center(g, v, d) - s), 1e-9));
        }
}

TEST_CASE("area weights match a supersampled beam footprint") {
    FanBeamGeometry g = small(7, 5, 6, 6);
    g.pitch = 3.0;
    double worst = 0.0;
    for (int v = 0; v < g.nv; ++v)
        for (int d = 0; d < g.nd; ++d) {
            const auto hits = beam_weights_area(g, pixel_grid(g), v, d);
            std::map<int, double> got;
            double peak = 0.0;
            for (const auto& h : hits) {
                got[h.pixel] = h.weight;
                peak = std::max(peak, h.weight);
            }
            for (int r = 0; r < g.ny; ++r)
                for (int c = 0; c < g.nx; ++c) {
                    const double expected = oracle::area_weight_supersampled(g, v, d, r, c, 300);
                    const double w = got.contains(r * g.nx + c) ? got[r * g.nx + c] : 0.0;
                    worst = std::max(worst, std::fabs(w - expected) / std::max(peak, 1e-12));
                }
        }
    CHECK(worst < 0.01);
}

TEST_CASE("area weights of a wide flat beam on one pixel") {
    // A beam much wider than the grid covers the single pixel completely:
    // weight = area / (depth * spread) with depth = sto.
    FanBeamGeometry g;
    g.nd = 1;
    g.nv = 1;
    g.nx = 1;
    g.ny = 1;
    g.sto = 100.0;
    g.stdd = 200.0;
    g.pitch = 50.0;
    const auto hits = beam_weights_area(g, pixel_grid(g), 0, 0);
    REQUIRE(hits.size() == 1);
    const double spread = 2.0 * 25.0 / 200.0;
    CHECK_THAT(hits[0].weight, WithinRel(1.0 / (100.0 * spread), 1e-12));
}

TEST_CASE("matrix build is identical for any thread count") {
    for (const auto mode : {ProjectorMode::line, ProjectorMode::area}) {
        const FanBeamGeometry g = small();
        BuildOptions one;
        one.mode = mode;
        BuildOptions many = one;
        many.threads = 5;
        const SparseSystemMatrix a = build_system_matrix(g, one);
        const SparseSystemMatrix b = build_system_matrix(g, many);
        CHECK(a == b);
        CHECK(a.row_count() == static_cast<std::size_t>(g.nd * g.nv));
        CHECK(a.memory_estimate() > 0);
        CHECK(predicted_matrix_bytes(g, mode) >= a.memory_estimate());
        for (std::size_t i = 0; i < a.row_count(); ++i)
            CHECK(a.row(i) == system_row(g, mode, static_cast<int>(i / g.nd), static_cast<int>(i % g.nd)));
    }
}

TEST_CASE("per-view column data agrees with the dense matrix") {
    const FanBeamGeometry g = small();
    const SparseSystemMatrix a = build_system_matrix(g, {});
    const oracle::Dense d = oracle::densify(a);
    for (int v = 0; v < g.nv; ++v) {
        const auto dense = a.view_col_sums_dense(v);
        for (std::size_t j = 0; j < d.cols; ++j) {
            double s = 0.0;
            for (int k = 0; k < g.nd; ++k) s += d.at(static_cast<std::size_t>(v) * g.nd + k, j);
            CHECK(dense[j] == s);
            CHECK(a.view_col_sum(v, j) == s);
        }
    }
}

TEST_CASE("forward and back projection against dense products") {
    const FanBeamGeometry g = small();
    for (const auto mode : {ProjectorMode::line, ProjectorMode::area}) {
        BuildOptions o;
        o.mode = mode;
        const SparseSystemMatrix a = build_system_matrix(g, o);
        const oracle::Dense d = oracle::densify(a);
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        ImageGrid x(g.nx, g.ny);
        Sinogram r(g.nd, g.nv);
        for (double& v : x.values()) v = u(rng);
        for (double& v : r.values()) v = u(rng);

        const auto ax = vec(forward_project(a, x, 3).values());
        const auto expect_ax = oracle::multiply(d, vec(x.values()));
        for (std::size_t i = 0; i < ax.size(); ++i) CHECK_THAT(ax[i], WithinAbs(expect_ax[i], 1e-12));
        const auto atr = vec(back_project(a, r, 3).values());
        const auto expect_atr = oracle::multiply_transpose(d, vec(r.values()));
        for (std::size_t j = 0; j < atr.size(); ++j) CHECK_THAT(atr[j], WithinAbs(expect_atr[j], 1e-12));
    }
}

TEST_CASE("parallel projection kernels agree bitwise with the serial reference") {
    const FanBeamGeometry g = small(31, 17, 20, 20);
    const SparseSystemMatrix a = build_system_matrix(g, {});
    const ImageGrid x = shepp_logan(g.nx, g.ny);
    const Sinogram p = reference::forward_project(a, x);
    const ImageGrid bp = reference::back_project(a, p);
    for (const int t : {1, 2, 3, 8}) {
        CHECK(forward_project(a, x, t) == p);
        CHECK(back_project(a, p, t) == bp);
    }
}

TEST_CASE("ROI builds keep only mask pixels and equal a restricted full build") {
    const FanBeamGeometry g = small();
    const PixelMask mask = roi_mask(pixel_grid(g), {2, 3, 5, 4});
    BuildOptions o;
    o.roi = mask;
    const SparseSystemMatrix roi = build_system_matrix(g, o);
    const SparseSystemMatrix full = build_system_matrix(g, {});
    for (std::size_t i = 0; i < roi.row_count(); ++i)
        for (const auto p : roi.row_pixels(i)) CHECK(mask.test(static_cast<std::size_t>(p)));
    CHECK(roi == restrict_to_mask(full, mask));
    CHECK(roi.entry_count() < full.entry_count());
}

TEST_CASE("build reports progress and honours the memory cap") {
    const FanBeamGeometry g = small();
    std::vector<int> views;
    BuildOptions o;
    o.progress = [&](int done, std::size_t bytes) {
        views.push_back(done);
        CHECK(bytes > 0);
    };
    const SparseSystemMatrix a = build_system_matrix(g, o);
    REQUIRE_FALSE(views.empty());
    CHECK(std::is_sorted(views.begin(), views.end()));
    CHECK(views.back() == g.nv);

    BuildOptions capped;
    capped.memory_cap_bytes = 1000;
    try {
        build_system_matrix(g, capped);
        FAIL("expected the cap to trip");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::resource_exhausted);
    }
    capped.memory_cap_bytes = predicted_matrix_bytes(g, ProjectorMode::line);
    CHECK_NOTHROW(build_system_matrix(g, capped));
}

TEST_CASE("projection rejects mismatched shapes") {
    const FanBeamGeometry g = small();
    const SparseSystemMatrix a = build_system_matrix(g, {});
    const auto code = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::io;
    };
    CHECK(code([&] { forward_project(a, ImageGrid(g.nx + 1, g.ny)); }) == ErrorCode::dimension_mismatch);
    CHECK(code([&] { back_project(a, Sinogram(g.nd, g.nv + 1)); }) == ErrorCode::dimension_mismatch);
    BuildOptions bad;
    bad.threads = 0;
    CHECK(code([&] { build_system_matrix(g, bad); }) == ErrorCode::invalid_argument);
}

TEST_CASE("projector mode names") {
    CHECK(parse_projector_mode("line") == ProjectorMode::line);
    CHECK(parse_projector_mode("area") == ProjectorMode::area);
    CHECK(to_string(ProjectorMode::area) == "area");
    CHECK_THROWS_AS(parse_projector_mode("cone"), Error);
}
