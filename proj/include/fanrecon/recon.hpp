#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "fanrecon/arrays.hpp"
#include "fanrecon/projector.hpp"

namespace fanrecon {

enum class Algorithm { sart, sbir };
enum class ViewOrder { sequential, random };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);

struct SartParams {
    double lambda = 1.0;
    ViewOrder view_order = ViewOrder::sequential;
    std::uint64_t order_seed = 0;
    bool nonneg_clamp = false;
};

void validate(const SartParams& params);

/// View visiting order for the sweep with zero-based index `sweep`. A random
/// order depends only on (order_seed, sweep), so a split run visits views
/// exactly like an unsplit one.
std::vector<int> sweep_view_order(const SartParams& params, int nv, std::int64_t sweep);

/// One SART sweep over all views, in place.
///
/// For each view V and every pixel j touched by V:
///   x_j += lambda * sum_{i in V} a_ij (p_i - sum_l a_il x_l) / rowsum_i
///                 / sum_{i in V} a_ij
/// Rows and columns with zero sums are skipped. Bitwise identical for any
/// thread count.
void sart_sweep(const SparseSystemMatrix& a, const Sinogram& p, ImageGrid& x,
                const SartParams& params, std::int64_t sweep = 0, int threads = 1);

ImageGrid sart_iteration(const SparseSystemMatrix& a, const Sinogram& p, const ImageGrid& x,
                         const SartParams& params, int threads = 1);

/// sqrt(sum_i (p_i - (Ax)_i)^2 / (nd * nv))
double residual_rms(const SparseSystemMatrix& a, const Sinogram& p, const ImageGrid& x,
                    int threads = 1);

/// Root-mean-square pixel difference.
double image_rmse(const ImageGrid& x, const ImageGrid& reference);

struct ConvergencePoint {
    std::int64_t iteration = 0;
    double residual_rms = 0.0;
    std::optional<double> image_rmse;

    friend bool operator==(const ConvergencePoint&, const ConvergencePoint&) = default;
};

/// The four indicators shown when a run completes.
struct RunReport {
    double time1 = 0.0;  // seconds spent building the system matrix
    double time2 = 0.0;  // seconds spent in the most recent set of iterations
    double min = 0.0;
    double max = 0.0;
};

enum class RunStatus { idle, running, done };
std::string_view to_string(RunStatus s);

struct IterationUpdate {
    ConvergencePoint point;
    std::shared_ptr<const ImageGrid> snapshot;
};

using IterationCallback = std::function<void(const IterationUpdate&)>;

/// State of one reconstruction: matrix, data, estimate and convergence history.
///
/// Not thread-safe apart from request_cancel() and status(); one thread
/// drives a run while others may only read through their own
/// synchronisation.
class ReconSession {
public:
    ReconSession(std::shared_ptr<const SparseSystemMatrix> matrix, Sinogram sinogram,
                 SartParams params = {}, Algorithm algorithm = Algorithm::sart, int threads = 1,
                 std::optional<ImageGrid> original = std::nullopt, double matrix_seconds = 0.0);

    RunStatus status() const noexcept { return status_.load(); }
    std::int64_t iteration() const noexcept { return static_cast<std::int64_t>(history_.size()); }
    const std::vector<ConvergencePoint>& history() const noexcept { return history_; }
    const ImageGrid& estimate() const noexcept { return estimate_; }
    const Sinogram& sinogram() const noexcept { return sinogram_; }
    const std::optional<ImageGrid>& original() const noexcept { return original_; }
    const std::shared_ptr<const SparseSystemMatrix>& matrix() const noexcept { return matrix_; }
    const SartParams& params() const noexcept { return params_; }
    Algorithm algorithm() const noexcept { return algorithm_; }
    int threads() const noexcept { return threads_; }

    /// Bytes held by the system matrix; 0 once released.
    std::size_t memory_estimate() const noexcept;

    /// Present once a run has completed.
    std::optional<RunReport> report() const;

    /// Supplies a freshly built matrix after restart().
    void attach_matrix(std::shared_ptr<const SparseSystemMatrix> matrix, double matrix_seconds);

    /// Asks a running sweep loop to stop after the sweep in progress.
    void request_cancel() noexcept { cancel_.store(true); }

    /// Runs n sweeps from the initial (all-zero) solution.
    void run(int n, const IterationCallback& emit = {});
    /// Runs n more sweeps from the current estimate; requires status done.
    void continue_run(int n, const IterationCallback& emit = {});
    /// Resets to the initial solution and releases the matrix.
    void restart();

private:
    void sweep_loop(int n, const IterationCallback& emit);
    void check_runnable(int n) const;

    std::shared_ptr<const SparseSystemMatrix> matrix_;
    Sinogram sinogram_;
    SartParams params_;
    Algorithm algorithm_;
    int threads_;
    std::optional<ImageGrid> original_;
    ImageGrid estimate_;
    std::vector<ConvergencePoint> history_;
    std::atomic<RunStatus> status_{RunStatus::idle};
    std::atomic<bool> cancel_{false};
    double time1_ = 0.0;
    double time2_ = 0.0;
};

ReconSession& run_iterations(ReconSession& session, int n, const IterationCallback& emit = {});
ReconSession& continue_run(ReconSession& session, int n, const IterationCallback& emit = {});
ReconSession& restart(ReconSession& session);

}  // namespace fanrecon
