#include "fanrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>

#include "fanrecon/errors.hpp"

namespace fanrecon {

namespace {

void check_rect(const ImageGrid& img, const RoiRect& rect) {
    if (!rect.inside(img.nx(), img.ny()))
        throw Error(ErrorCode::out_of_range,
                    "rectangle " + std::to_string(rect.row0) + "," + std::to_string(rect.col0) +
                        "," + std::to_string(rect.rows) + "," + std::to_string(rect.cols) +
                        " is empty or outside the image",
                    "rect");
}

}  // namespace

ProfileAxis parse_profile_axis(std::string_view text) {
    if (text == "horizontal" || text == "h") return ProfileAxis::horizontal;
    if (text == "vertical" || text == "v") return ProfileAxis::vertical;
    throw Error(ErrorCode::invalid_argument,
                "axis must be 'horizontal' or 'vertical', got '" + std::string(text) + "'", "axis");
}

double region_mean(const ImageGrid& img, const RoiRect& rect) {
    check_rect(img, rect);
    double sum = 0.0;
    for (int r = rect.row0; r < rect.row0 + rect.rows; ++r)
        for (int c = rect.col0; c < rect.col0 + rect.cols; ++c) sum += img.at(r, c);
    return sum / static_cast<double>(rect.area());
}

double region_std(const ImageGrid& img, const RoiRect& rect) {
    const double mean = region_mean(img, rect);
    double sum = 0.0;
    for (int r = rect.row0; r < rect.row0 + rect.rows; ++r)
        for (int c = rect.col0; c < rect.col0 + rect.cols; ++c) {
            const double d = img.at(r, c) - mean;
            sum += d * d;
        }
    return std::sqrt(sum / static_cast<double>(rect.area()));
}

SnrResult snr(const ImageGrid& img, const RoiRect& signal, const RoiRect& noise) {
    SnrResult out;
    out.signal_mean = region_mean(img, signal);
    out.noise_std = region_std(img, noise);
    if (out.noise_std == 0.0) {
        out.kind = SnrKind::not_available;
        return out;
    }
    out.value = out.signal_mean / out.noise_std;
    out.kind = out.value > kSnrCap ? SnrKind::above_cap : SnrKind::value;
    return out;
}

double region_mse(const ImageGrid& recon, const ImageGrid& original, const RoiRect& rect) {
    if (recon.nx() != original.nx() || recon.ny() != original.ny())
        throw Error(ErrorCode::dimension_mismatch, "images differ in shape");
    check_rect(recon, rect);
    double sum = 0.0;
    for (int r = rect.row0; r < rect.row0 + rect.rows; ++r)
        for (int c = rect.col0; c < rect.col0 + rect.cols; ++c) {
            const double d = recon.at(r, c) - original.at(r, c);
            sum += d * d;
        }
    return sum / static_cast<double>(rect.area());
}

std::vector<double> profile(const ImageGrid& img, ProfileAxis axis, int index) {
    const int limit = axis == ProfileAxis::horizontal ? img.ny() : img.nx();
    if (index < 0 || index >= limit)
        throw Error(ErrorCode::out_of_range,
                    "profile index " + std::to_string(index) + " outside [0, " +
                        std::to_string(limit) + ")",
                    "index");
    std::vector<double> out;
    if (axis == ProfileAxis::horizontal) {
        out.reserve(img.nx());
        for (int c = 0; c < img.nx(); ++c) out.push_back(img.at(index, c));
    } else {
        out.reserve(img.ny());
        for (int r = 0; r < img.ny(); ++r) out.push_back(img.at(r, index));
    }
    return out;
}

std::pair<double, double> min_max(const ImageGrid& img) {
    if (img.size() == 0) throw Error(ErrorCode::invalid_argument, "image is empty");
    const auto [lo, hi] = std::minmax_element(img.values().begin(), img.values().end());
    return {*lo, *hi};
}

std::string format_metric(double v) {
    char buf[400];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
    return std::string(buf, r.ptr);
}

std::string format_snr(const SnrResult& r) {
    switch (r.kind) {
        case SnrKind::not_available: return "n/a";
        case SnrKind::above_cap: return "> 10000.0";
        case SnrKind::value: return format_metric(r.value);
    }
    return "n/a";
}

}  // namespace fanrecon
