#include <catch_amalgamated.hpp>

#include <cmath>

#include "fanrecon/errors.hpp"
#include "fanrecon/metrics.hpp"
#include "fanrecon/recon.hpp"

using namespace fanrecon;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ImageGrid ramp(int nx, int ny) {
    ImageGrid img(nx, ny);
    for (int r = 0; r < ny; ++r)
        for (int c = 0; c < nx; ++c) img.at(r, c) = 10.0 * r + c;
    return img;
}

}  // namespace

TEST_CASE("region mean and population std") {
    const ImageGrid img = ramp(5, 4);
    // rows 1..2, cols 0..1: 10 11 20 21
    const RoiRect r{1, 0, 2, 2};
    CHECK(region_mean(img, r) == 15.5);
    const double var = (5.5 * 5.5 * 2 + 4.5 * 4.5 * 2) / 4.0;
    CHECK_THAT(region_std(img, r), WithinRel(std::sqrt(var), 1e-15));
    CHECK(region_std(img, {0, 0, 1, 1}) == 0.0);
    CHECK_THROWS_AS(region_mean(img, {3, 0, 2, 1}), Error);
}

TEST_CASE("snr rules") {
    ImageGrid img(4, 4, std::vector<double>(16, 2.0));
    const RoiRect signal{0, 0, 2, 2};
    const RoiRect noise{2, 2, 2, 2};
    auto s = snr(img, signal, noise);
    CHECK(s.kind == SnrKind::not_available);
    CHECK(format_snr(s) == "n/a");

    img.at(2, 2) = 3.0;  // noise values 3 2 2 2: std = sqrt(3)/4
    s = snr(img, signal, noise);
    REQUIRE(s.kind == SnrKind::value);
    CHECK_THAT(s.value, WithinRel(2.0 / (std::sqrt(3.0) / 4.0), 1e-14));
    CHECK_THAT(s.noise_std, WithinRel(std::sqrt(3.0) / 4.0, 1e-14));
    CHECK(format_snr(s) == "4.618802");

    img.at(2, 2) = 2.0 + 1e-5;
    s = snr(img, signal, noise);
    CHECK(s.kind == SnrKind::above_cap);
    CHECK(format_snr(s) == "> 10000.0");

    // negative mean stays a plain value
    for (double& v : img.values()) v = -v;
    s = snr(img, signal, noise);
    CHECK(s.kind == SnrKind::value);
    CHECK(s.value < 0.0);
}

TEST_CASE("region mse") {
    const ImageGrid a = ramp(4, 4);
    ImageGrid b = a;
    b.at(1, 1) += 2.0;
    CHECK(region_mse(a, b, {0, 0, 2, 2}) == 1.0);
    CHECK(region_mse(a, b, {2, 2, 2, 2}) == 0.0);
    CHECK_THROWS_AS(region_mse(a, ImageGrid(3, 4), {0, 0, 1, 1}), Error);
}

TEST_CASE("profiles") {
    const ImageGrid img = ramp(5, 3);
    CHECK(profile(img, ProfileAxis::horizontal, 2) == std::vector<double>{20, 21, 22, 23, 24});
    CHECK(profile(img, ProfileAxis::vertical, 4) == std::vector<double>{4, 14, 24});
    CHECK_THROWS_AS(profile(img, ProfileAxis::horizontal, 3), Error);
    CHECK_THROWS_AS(profile(img, ProfileAxis::vertical, -1), Error);
    CHECK(parse_profile_axis("horizontal") == ProfileAxis::horizontal);
    CHECK(parse_profile_axis("vertical") == ProfileAxis::vertical);
    CHECK_THROWS_AS(parse_profile_axis("diagonal"), Error);
}

TEST_CASE("min max, rmse and metric formatting") {
    const ImageGrid img = ramp(3, 2);
    CHECK(min_max(img) == std::pair{0.0, 12.0});
    ImageGrid other = img;
    other.at(0, 0) = 3.0;
    CHECK_THAT(image_rmse(img, other), WithinRel(std::sqrt(9.0 / 6.0), 1e-15));
    CHECK(format_metric(1.0 / 3.0) == "0.333333");
    CHECK(format_metric(-2.5) == "-2.500000");
}
