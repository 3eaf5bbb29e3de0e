#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "fanrecon/arrays.hpp"
#include "fanrecon/geometry.hpp"
#include "fanrecon/projector.hpp"

namespace fanrecon {

enum class NoiseModel { poisson, gaussian };

struct NoiseSpec {
    NoiseModel model = NoiseModel::poisson;
    double i0 = 1e5;     // incident photons per ray (poisson)
    double sigma = 0.0;  // additive standard deviation (gaussian)
    std::uint64_t seed = 0;
};

void validate(const NoiseSpec& spec);

/// Parses "poisson:I0" or "gauss:SIGMA" (also "gaussian:SIGMA").
NoiseSpec parse_noise(std::string_view text, std::uint64_t seed = 0);
std::string to_string(const NoiseSpec& spec);

/// Forward projection of the phantom through the reconstruction model.
Sinogram synthesize_sinogram(const SparseSystemMatrix& a, const ImageGrid& phantom,
                             int threads = 1);

/// Poisson: p' = -ln(max(k, 1) / i0), k ~ Poisson(i0 exp(-p)).
/// Gaussian: p' = p + N(0, sigma^2).
/// Draws are made sequentially in row order, so the seed alone fixes the result.
Sinogram add_noise(const Sinogram& p, const NoiseSpec& spec);

PixelMask roi_mask(const PixelGrid& grid, const RoiRect& roi);

/// Parses "row,col,height,width".
RoiRect parse_roi(std::string_view text);

/// Uniform disk of the given radius (pixel units) centred on the grid.
ImageGrid disk_phantom(int nx, int ny, double radius, double value = 1.0);

/// Modified Shepp-Logan head phantom on an nx by ny grid.
ImageGrid shepp_logan(int nx, int ny);

}  // namespace fanrecon
