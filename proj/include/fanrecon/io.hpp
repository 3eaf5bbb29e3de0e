#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fanrecon/arrays.hpp"
#include "fanrecon/recon.hpp"

namespace fanrecon::io {

// Text formats hold one real per line. Sinograms are view-major (the first nd
// values are view 0), images are row-major with the top row first. Blank
// lines are only tolerated at the end of the file.

/// Parses exactly `expected` numbers; errors cite the first offending line.
std::vector<double> parse_values(std::string_view text, std::size_t expected);

Sinogram parse_sinogram(std::string_view text, int nd, int nv);
ImageGrid parse_phantom(std::string_view text, int nx, int ny);

Sinogram load_sinogram_text(const std::filesystem::path& path, int nd, int nv);
ImageGrid load_phantom_text(const std::filesystem::path& path, int nx, int ny);

/// 17 significant digits, one value per line.
std::string format_values(std::span<const double> values);
void save_sinogram_text(const Sinogram& p, const std::filesystem::path& path);
void save_image_text(const ImageGrid& img, const std::filesystem::path& path);

std::string format_convergence_csv(const std::vector<ConvergencePoint>& history);
void save_convergence_csv(const std::vector<ConvergencePoint>& history,
                          const std::filesystem::path& path);
std::vector<ConvergencePoint> load_convergence_csv(const std::filesystem::path& path);

/// key=value lines: time1, time2 with 3 decimals, then min and max at full precision.
std::string format_report(const RunReport& report);
void save_report(const RunReport& report, const std::filesystem::path& path);

/// 16-bit binary PGM (P5). The window defaults to [min, max]; a degenerate
/// default window maps every pixel to 0. An explicit window needs lo < hi.
std::string encode_pgm(const ImageGrid& img,
                       std::optional<std::pair<double, double>> window = std::nullopt);
void export_pgm(const ImageGrid& img, const std::filesystem::path& path,
                std::optional<std::pair<double, double>> window = std::nullopt);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Shortest-exact decimal rendering at 17 significant digits.
std::string format_real(double v);

}  // namespace fanrecon::io
