#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fanrecon/arrays.hpp"
#include "fanrecon/errors.hpp"
#include "fanrecon/workflow.hpp"

namespace fanrecon::service {

using json = nlohmann::json;

/// Longest side of the 8-bit previews carried by events.
inline constexpr int kSnapshotMaxSide = 256;

/// Session settings: the numeric run configuration plus the display toggles
/// the operator console keeps per session.
struct SessionConfig {
    RunConfig run;
    bool maintain_aspect_ratio = true;
    bool show_realtime_convergence = true;
    bool high_priority = false;
};

/// Application defaults: real-sinogram mode, line integrals, every detected
/// processor, aspect ratio and live convergence on, normal priority.
SessionConfig default_config(int max_threads);

json to_json(const SessionConfig& config);

/// Applies the keys present in `patch` on top of `base`. Unknown keys, wrong
/// types and invalid values throw Error naming the field (dotted for nested
/// keys, e.g. "geometry.nd").
SessionConfig merge_config(const SessionConfig& base, const json& patch, int max_threads);

/// 8-bit preview: box-averaged down to at most kSnapshotMaxSide per side, then
/// [min, max] of the full-precision image mapped linearly onto 0..255.
struct Snapshot {
    int width = 0;
    int height = 0;
    double min = 0.0;
    double max = 0.0;
    std::vector<std::uint8_t> pixels;
};

Snapshot make_snapshot(const ImageGrid& img);
json to_json(const Snapshot& snap);

struct Event {
    std::uint64_t seq = 0;
    std::string type;  // matrix, sinogram, iteration, report, error, cancelled, reset
    json data;
};

struct SessionState;

/// Cursor over one session's event log. The first call to next() replays
/// what already happened in the current run (matrix progress, every
/// iteration so far, the report if the run is over); later calls deliver new
/// events as they are published. Only the most recent iteration event in a
/// batch carries the image preview.
class Subscription {
public:
    explicit Subscription(std::shared_ptr<SessionState> state);

    /// Waits up to `timeout` for at least one event.
    std::vector<Event> next(std::chrono::milliseconds timeout);
    /// True once a finished run has been fully delivered, or the session is gone.
    bool closed() const noexcept { return closed_; }

private:
    std::shared_ptr<SessionState> state_;
    std::uint64_t cursor_ = 0;
    bool closed_ = false;
};

/// Session manager behind the HTTP layer. Every method is thread-safe;
/// failures throw fanrecon::Error whose code decides the HTTP status.
class Service {
public:
    explicit Service(int max_threads = 0);  // 0: detected processor count
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    int max_threads() const noexcept { return max_threads_; }
    json capabilities() const;

    /// Returns the new session's description (with its "id").
    json create_session(const json& config = json::object());
    json describe(const std::string& id) const;
    json update_config(const std::string& id, const json& patch);
    void delete_session(const std::string& id);
    std::vector<std::string> session_ids() const;

    /// kind is "sinogram" (real mode) or "phantom" (simulation mode).
    json upload(const std::string& id, std::string_view kind, std::string_view text);

    /// Starts a fresh run on a background thread and returns immediately.
    json start_run(const std::string& id, int iterations);
    json continue_run(const std::string& id, int iterations);
    json restart(const std::string& id);
    json cancel(const std::string& id);
    /// Blocks until the session is not running (test and shutdown helper).
    void wait(const std::string& id) const;

    /// role is "signal" or "noise"; nullopt clears it.
    json set_region(const std::string& id, std::string_view role, std::optional<RoiRect> rect);
    json regions(const std::string& id) const;
    json profile(const std::string& id, std::string_view axis, int index) const;
    json report(const std::string& id) const;
    json history(const std::string& id) const;
    std::string history_csv(const std::string& id) const;

    /// which: "reconstruction", "original" or "sinogram" (views as rows).
    ImageGrid image(const std::string& id, std::string_view which) const;

    Subscription subscribe(const std::string& id) const;

private:
    std::shared_ptr<SessionState> find(const std::string& id) const;
    json launch(const std::shared_ptr<SessionState>& s, int iterations, bool fresh);

    int max_threads_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<SessionState>> sessions_;
    std::uint64_t next_id_ = 1;
};

/// HTTP status for an error category.
int http_status(ErrorCode code);
/// {code, message, field?, line?}
json error_body(const std::exception& e);

}  // namespace fanrecon::service
