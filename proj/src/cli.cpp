#include "fanrecon/cli.hpp"

#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <omp.h>

#include "fanrecon/errors.hpp"
#include "fanrecon/io.hpp"

namespace fanrecon::cli {

namespace {

// Errors from reading the input are data problems; everything after is runtime.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::exception& e) : std::runtime_error(e.what()) {}
};

}  // namespace

CliConfig parse_args(int argc, const char* const* argv) {
    CliConfig cfg;
    auto& g = cfg.run.geometry;
    cfg.run.threads = omp_get_num_procs();

    CLI::App app{"Fan-beam CT reconstruction (SART) from a sinogram, or from a simulated phantom scan.",
                 argc > 0 ? argv[0] : "fanrecon"};
    std::string sinogram, phantom, algorithm = "sart", projector = "line", noise, roi;
    std::optional<double> pitch;
    std::uint64_t seed = 0;

    auto* sino_opt = app.add_option("--sinogram", sinogram, "Sinogram text file: nd*nv values, view-major");
    auto* phan_opt = app.add_option("--phantom", phantom, "Phantom text file (simulation mode): nx*ny values, row-major");
    sino_opt->excludes(phan_opt);
    phan_opt->excludes(sino_opt);
    app.add_option("--nd", g.nd, "Detector cells")->capture_default_str();
    app.add_option("--nv", g.nv, "Views")->capture_default_str();
    app.add_option("--nx", g.nx, "Image columns")->capture_default_str();
    app.add_option("--ny", g.ny, "Image rows")->capture_default_str();
    app.add_option("--sto", g.sto, "Source to rotation centre distance")->capture_default_str();
    app.add_option("--std", g.stdd, "Source to detector line distance")->capture_default_str();
    app.add_option("--pitch", pitch, "Detector cell width (default: spans the magnified field of view)");
    app.add_option("--pixel-size", g.pixel_size, "Pixel edge length")->capture_default_str();
    app.add_option("--arc", g.arc, "Scan arc in radians")->capture_default_str();
    app.add_option("--iterations", cfg.iterations, "SART sweeps")->capture_default_str();
    app.add_option("--algorithm", algorithm, "sart | sbir")->capture_default_str();
    app.add_option("--projector", projector, "line | area")->capture_default_str();
    app.add_option("--threads", cfg.run.threads, "Worker threads")->capture_default_str();
    app.add_option("--lambda", cfg.run.sart.lambda, "Relaxation factor in (0, 2)")->capture_default_str();
    auto* noise_opt = app.add_option("--noise", noise, "poisson:I0 | gauss:SIGMA (simulation only)");
    app.add_option("--seed", seed, "Noise seed")->capture_default_str();
    app.add_option("--roi", roi, "Reconstruct only rows r..r+h-1, cols c..c+w-1: r,c,h,w");
    app.add_option("--out", cfg.out, "Output directory")->capture_default_str();
    app.add_flag("--high-priority", cfg.high_priority, "Ask for the highest process priority");
    noise_opt->needs(phan_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested(app.help());
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }
    if (sinogram.empty() && phantom.empty())
        throw UsageError("an input is required: --sinogram FILE or --phantom FILE");

    try {
        cfg.run.simulation = !phantom.empty();
        cfg.input = cfg.run.simulation ? phantom : sinogram;
        g.pitch = pitch;
        cfg.run.algorithm = parse_algorithm(algorithm);
        cfg.run.projector = parse_projector_mode(projector);
        if (!noise.empty()) cfg.run.noise = parse_noise(noise, seed);
        if (!roi.empty()) cfg.run.roi = parse_roi(roi);
        if (cfg.iterations < 1)
            throw Error(ErrorCode::invalid_argument, "must be at least 1", "iterations");
        validate(cfg.run);
    } catch (const Error& e) {
        std::string flag = e.field() == "stdd" ? "std" : e.field();
        std::replace(flag.begin(), flag.end(), '_', '-');
        throw UsageError(flag.empty() ? std::string(e.what()) : "--" + flag + ": " + e.what());
    }
    return cfg;
}

void run_batch(const CliConfig& config, std::ostream& out, std::ostream& err) {
    if (config.high_priority && !raise_process_priority())
        err << "warning: could not raise process priority; continuing at normal priority\n";

    const auto& g = config.run.geometry;
    std::optional<Sinogram> data;
    std::optional<ImageGrid> phantom;
    try {
        if (config.run.simulation)
            phantom = io::load_phantom_text(config.input, g.nx, g.ny);
        else
            data = io::load_sinogram_text(config.input, g.nd, g.nv);
    } catch (const std::exception& e) {
        throw InputError(e);
    }

    std::error_code ec;
    std::filesystem::create_directories(config.out, ec);
    // Fail before the expensive part if the outputs cannot be written.
    io::write_file(config.out / "report.txt", "");

    PreparedRun prepared = prepare(config.run, data ? &*data : nullptr, phantom ? &*phantom : nullptr);
    if (config.run.simulation) io::save_sinogram_text(prepared.sinogram, config.out / "sinogram.txt");
    auto session = make_session(config.run, std::move(prepared));
    session->run(config.iterations);

    const RunReport report = *session->report();
    io::save_report(report, config.out / "report.txt");
    io::save_convergence_csv(session->history(), config.out / "convergence.csv");
    io::save_image_text(session->estimate(), config.out / "reconstruction.txt");
    io::export_pgm(session->estimate(), config.out / "reconstruction.pgm");
    out << io::format_report(report);
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CliConfig config;
    try {
        config = parse_args(argc, argv);
    } catch (const HelpRequested& h) {
        out << h.what();
        return 0;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\nrun with --help for the flag list\n";
        return 1;
    }
    try {
        run_batch(config, out, err);
        return 0;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        switch (e.code()) {
            case ErrorCode::format:
            case ErrorCode::dimension_mismatch:
            case ErrorCode::domain: return 2;
            default: return 3;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace fanrecon::cli
