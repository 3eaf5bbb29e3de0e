#include "fanrecon/workflow.hpp"

#include <chrono>
#include <sys/resource.h>

#include "fanrecon/errors.hpp"

namespace fanrecon {

void validate(const RunConfig& config) {
    validate(config.geometry);
    validate(config.sart);
    if (config.threads < 1)
        throw Error(ErrorCode::invalid_argument, "thread count must be at least 1", "threads");
    if (config.noise) {
        if (!config.simulation)
            throw Error(ErrorCode::invalid_argument, "noise is only added in simulation mode", "noise");
        validate(*config.noise);
    }
    if (config.roi && !config.roi->inside(config.geometry.nx, config.geometry.ny))
        throw Error(ErrorCode::out_of_range, "ROI is empty or outside the reconstruction grid", "roi");
}

PreparedRun prepare(const RunConfig& config, const Sinogram* data, const ImageGrid* phantom,
                    const std::function<void(int, std::size_t)>& progress) {
    validate(config);
    if (config.algorithm == Algorithm::sbir)
        throw Error(ErrorCode::not_implemented, "algorithm 'sbir' is not implemented", "algorithm");
    const FanBeamGeometry& g = config.geometry;

    PreparedRun out;
    if (config.simulation) {
        if (!phantom) throw Error(ErrorCode::invalid_state, "simulation mode needs a phantom", "phantom");
        if (phantom->nx() != g.nx || phantom->ny() != g.ny)
            throw Error(ErrorCode::dimension_mismatch, "phantom is " + std::to_string(phantom->nx()) +
                                                           "x" + std::to_string(phantom->ny()) +
                                                           ", geometry wants " + std::to_string(g.nx) +
                                                           "x" + std::to_string(g.ny),
                        "phantom");
    } else {
        if (!data) throw Error(ErrorCode::invalid_state, "real mode needs a sinogram", "sinogram");
        if (data->nd() != g.nd || data->nv() != g.nv)
            throw Error(ErrorCode::dimension_mismatch, "sinogram is " + std::to_string(data->nd()) +
                                                           "x" + std::to_string(data->nv()) +
                                                           ", geometry wants nd=" + std::to_string(g.nd) +
                                                           " nv=" + std::to_string(g.nv),
                        "sinogram");
    }

    std::optional<PixelMask> mask;
    if (config.roi) mask = roi_mask(pixel_grid(g), *config.roi);

    BuildOptions options;
    options.mode = config.projector;
    options.threads = config.threads;
    options.memory_cap_bytes = config.memory_cap_bytes;
    options.progress = progress;
    // The simulated sinogram must see the whole phantom, so the ROI is applied
    // after synthesis rather than during the build.
    if (!config.simulation) options.roi = mask;

    using clock = std::chrono::steady_clock;
    auto started = clock::now();
    SparseSystemMatrix a = build_system_matrix(g, options);
    out.matrix_seconds = std::chrono::duration<double>(clock::now() - started).count();
    if (config.simulation) {
        out.sinogram = synthesize_sinogram(a, *phantom, config.threads);
        if (config.noise) out.sinogram = add_noise(out.sinogram, *config.noise);
        out.original = *phantom;
        if (mask) {
            started = clock::now();
            a = restrict_to_mask(a, *mask);
            out.matrix_seconds += std::chrono::duration<double>(clock::now() - started).count();
        }
    } else {
        out.sinogram = *data;
    }
    out.matrix = std::make_shared<const SparseSystemMatrix>(std::move(a));
    return out;
}

std::unique_ptr<ReconSession> make_session(const RunConfig& config, PreparedRun prepared) {
    return std::make_unique<ReconSession>(std::move(prepared.matrix), std::move(prepared.sinogram),
                                          config.sart, config.algorithm, config.threads,
                                          std::move(prepared.original), prepared.matrix_seconds);
}

bool raise_process_priority() {
    return setpriority(PRIO_PROCESS, 0, -20) == 0;
}

}  // namespace fanrecon
