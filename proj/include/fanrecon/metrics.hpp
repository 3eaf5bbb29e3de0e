#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fanrecon/arrays.hpp"

namespace fanrecon {

/// SNR values above this are shown as "> 10000.0".
inline constexpr double kSnrCap = 10000.0;

enum class SnrKind { value, not_available, above_cap };

struct SnrResult {
    SnrKind kind = SnrKind::not_available;
    double value = 0.0;  // meaningful for kind == value (and holds the raw quotient for above_cap)
    double signal_mean = 0.0;
    double noise_std = 0.0;
};

struct RegionReport {
    RoiRect rect;
    double recon_value = 0.0;
    std::optional<double> original_value;
    std::optional<double> mse;
};

enum class ProfileAxis { horizontal, vertical };
ProfileAxis parse_profile_axis(std::string_view text);

double region_mean(const ImageGrid& img, const RoiRect& rect);
/// Population standard deviation (divides by N).
double region_std(const ImageGrid& img, const RoiRect& rect);
/// mean(signal) / std(noise), with the n/a and cap rules applied to the raw quotient.
SnrResult snr(const ImageGrid& img, const RoiRect& signal, const RoiRect& noise);
double region_mse(const ImageGrid& recon, const ImageGrid& original, const RoiRect& rect);

/// Row `index` left to right, or column `index` top to bottom.
std::vector<double> profile(const ImageGrid& img, ProfileAxis axis, int index);
std::pair<double, double> min_max(const ImageGrid& img);

/// "n/a", "> 10000.0", or the value with 6 decimals.
std::string format_snr(const SnrResult& r);
/// Fixed 6-decimal rendering used in the metrics list.
std::string format_metric(double v);

}  // namespace fanrecon
