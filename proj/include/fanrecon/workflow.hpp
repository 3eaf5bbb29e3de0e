#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>

#include "fanrecon/arrays.hpp"
#include "fanrecon/geometry.hpp"
#include "fanrecon/projector.hpp"
#include "fanrecon/recon.hpp"
#include "fanrecon/simulate.hpp"

namespace fanrecon {

/// Everything that decides the numbers a run produces. The batch CLI and the
/// session service both go through prepare() with one of these, which is what
/// keeps their artifacts identical.
struct RunConfig {
    FanBeamGeometry geometry;
    Algorithm algorithm = Algorithm::sart;
    ProjectorMode projector = ProjectorMode::line;
    int threads = 1;
    SartParams sart;
    bool simulation = false;
    std::optional<NoiseSpec> noise;  // simulation only
    std::optional<RoiRect> roi;
    std::size_t memory_cap_bytes = 0;
};

/// Throws Error naming the offending field.
void validate(const RunConfig& config);

struct PreparedRun {
    std::shared_ptr<const SparseSystemMatrix> matrix;
    double matrix_seconds = 0.0;  // wall-clock time to build the matrix, reported as time1
    Sinogram sinogram;            // what the reconstruction is fitted to
    std::optional<ImageGrid> original;
};

/// Builds the system matrix and, in simulation mode, synthesizes the
/// (optionally noisy) sinogram from the phantom with the full-grid matrix
/// before the ROI restriction is applied. `data` is the measured sinogram in
/// real mode and is ignored in simulation mode; `phantom` the reverse.
PreparedRun prepare(const RunConfig& config, const Sinogram* data, const ImageGrid* phantom,
                    const std::function<void(int, std::size_t)>& progress = {});

std::unique_ptr<ReconSession> make_session(const RunConfig& config, PreparedRun prepared);

/// Best-effort request for the highest scheduling priority the process may
/// take. Returns false (and leaves priority untouched) when refused.
bool raise_process_priority();

}  // namespace fanrecon
