#include "fanrecon/recon.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "fanrecon/errors.hpp"

namespace fanrecon {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class RunningGuard {
public:
    explicit RunningGuard(std::atomic<RunStatus>& status) : status_(status) {
        status_.store(RunStatus::running);
    }
    ~RunningGuard() { status_.store(RunStatus::done); }
    RunningGuard(const RunningGuard&) = delete;
    RunningGuard& operator=(const RunningGuard&) = delete;

private:
    std::atomic<RunStatus>& status_;
};

}  // namespace

std::string_view to_string(Algorithm a) { return a == Algorithm::sart ? "sart" : "sbir"; }

Algorithm parse_algorithm(std::string_view text) {
    if (text == "sart") return Algorithm::sart;
    if (text == "sbir") return Algorithm::sbir;
    throw Error(ErrorCode::invalid_argument,
                "algorithm must be 'sart' or 'sbir', got '" + std::string(text) + "'", "algorithm");
}

std::string_view to_string(RunStatus s) {
    switch (s) {
        case RunStatus::idle: return "idle";
        case RunStatus::running: return "running";
        case RunStatus::done: return "done";
    }
    return "idle";
}

void validate(const SartParams& params) {
    if (!(params.lambda > 0.0 && params.lambda < 2.0))
        throw Error(ErrorCode::invalid_argument, "lambda must lie in (0, 2)", "lambda");
}

std::vector<int> sweep_view_order(const SartParams& params, int nv, std::int64_t sweep) {
    std::vector<int> order(nv);
    std::iota(order.begin(), order.end(), 0);
    if (params.view_order == ViewOrder::random) {
        std::mt19937_64 rng(splitmix64(params.order_seed ^ splitmix64(static_cast<std::uint64_t>(sweep))));
        // Fisher-Yates with an explicit draw so the order does not depend on the library's shuffle.
        for (int i = nv - 1; i > 0; --i) {
            const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[i], order[j]);
        }
    }
    return order;
}

ImageGrid sart_iteration(const SparseSystemMatrix& a, const Sinogram& p, const ImageGrid& x,
                         const SartParams& params, int threads) {
    ImageGrid out = x;
    sart_sweep(a, p, out, params, 0, threads);
    return out;
}

double image_rmse(const ImageGrid& x, const ImageGrid& reference) {
    if (x.nx() != reference.nx() || x.ny() != reference.ny())
        throw Error(ErrorCode::dimension_mismatch, "images differ in shape");
    if (x.size() == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x.values()[j] - reference.values()[j];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(x.size()));
}

ReconSession::ReconSession(std::shared_ptr<const SparseSystemMatrix> matrix, Sinogram sinogram,
                           SartParams params, Algorithm algorithm, int threads,
                           std::optional<ImageGrid> original, double matrix_seconds)
    : matrix_(std::move(matrix)),
      sinogram_(std::move(sinogram)),
      params_(params),
      algorithm_(algorithm),
      threads_(threads),
      original_(std::move(original)),
      time1_(matrix_seconds) {
    validate(params_);
    if (threads_ < 1)
        throw Error(ErrorCode::invalid_argument, "thread count must be at least 1", "threads");
    if (!matrix_) throw Error(ErrorCode::invalid_argument, "session needs a system matrix");
    check_dimensions(*matrix_, sinogram_);
    const auto& g = matrix_->geometry();
    if (original_) check_dimensions(*matrix_, *original_);
    estimate_ = ImageGrid(g.nx, g.ny);
}

std::size_t ReconSession::memory_estimate() const noexcept {
    return matrix_ ? matrix_->memory_estimate() : 0;
}

std::optional<RunReport> ReconSession::report() const {
    if (status() != RunStatus::done) return std::nullopt;
    const auto [lo, hi] = std::minmax_element(estimate_.values().begin(), estimate_.values().end());
    return RunReport{time1_, time2_, *lo, *hi};
}

void ReconSession::attach_matrix(std::shared_ptr<const SparseSystemMatrix> matrix,
                                 double matrix_seconds) {
    if (status() == RunStatus::running)
        throw Error(ErrorCode::invalid_state, "cannot replace the matrix during a run");
    if (!matrix) throw Error(ErrorCode::invalid_argument, "null system matrix");
    check_dimensions(*matrix, sinogram_);
    check_dimensions(*matrix, estimate_);
    matrix_ = std::move(matrix);
    time1_ = matrix_seconds;
}

void ReconSession::check_runnable(int n) const {
    if (n < 1) throw Error(ErrorCode::invalid_argument, "iteration count must be at least 1", "iterations");
    if (algorithm_ == Algorithm::sbir)
        throw Error(ErrorCode::not_implemented, "algorithm 'sbir' is not implemented", "algorithm");
    if (!matrix_)
        throw Error(ErrorCode::invalid_state, "no system matrix; build one after restart");
}

void ReconSession::run(int n, const IterationCallback& emit) {
    if (status() == RunStatus::running)
        throw Error(ErrorCode::invalid_state, "a run is already in progress");
    check_runnable(n);
    std::fill(estimate_.values().begin(), estimate_.values().end(), 0.0);
    history_.clear();
    sweep_loop(n, emit);
}

void ReconSession::continue_run(int n, const IterationCallback& emit) {
    if (status() != RunStatus::done)
        throw Error(ErrorCode::invalid_state,
                    std::string("continue needs a completed run, session is ") +
                        std::string(to_string(status())));
    check_runnable(n);
    sweep_loop(n, emit);
}

void ReconSession::restart() {
    if (status() == RunStatus::running)
        throw Error(ErrorCode::invalid_state, "cannot restart while running");
    std::fill(estimate_.values().begin(), estimate_.values().end(), 0.0);
    history_.clear();
    history_.shrink_to_fit();
    matrix_.reset();
    time1_ = 0.0;
    time2_ = 0.0;
    status_.store(RunStatus::idle);
}

void ReconSession::sweep_loop(int n, const IterationCallback& emit) {
    cancel_.store(false);
    RunningGuard guard(status_);
    const auto started = std::chrono::steady_clock::now();
    const SparseSystemMatrix& a = *matrix_;
    for (int k = 0; k < n; ++k) {
        const std::int64_t sweep = iteration();
        sart_sweep(a, sinogram_, estimate_, params_, sweep, threads_);
        ConvergencePoint point{sweep + 1, residual_rms(a, sinogram_, estimate_, threads_), std::nullopt};
        if (original_) point.image_rmse = image_rmse(estimate_, *original_);
        history_.push_back(point);
        time2_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (emit) emit({point, std::make_shared<const ImageGrid>(estimate_)});
        if (cancel_.load()) break;
    }
    time2_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
}

ReconSession& run_iterations(ReconSession& session, int n, const IterationCallback& emit) {
    session.run(n, emit);
    return session;
}

ReconSession& continue_run(ReconSession& session, int n, const IterationCallback& emit) {
    session.continue_run(n, emit);
    return session;
}

ReconSession& restart(ReconSession& session) {
    session.restart();
    return session;
}

}  // namespace fanrecon
