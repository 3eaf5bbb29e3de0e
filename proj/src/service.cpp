#include "fanrecon/service.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <ctime>
#include <deque>
#include <iostream>
#include <random>
#include <thread>

#include <httplib.h>
#include <omp.h>

#include "fanrecon/errors.hpp"
#include "fanrecon/io.hpp"
#include "fanrecon/metrics.hpp"

namespace fanrecon::service {

namespace {

std::string now_iso8601() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Error bad_field(const std::string& field, const std::string& what) {
    return Error(ErrorCode::invalid_argument, field + ": " + what, field);
}

int get_int(const json& j, const std::string& field) {
    if (!j.is_number_integer()) throw bad_field(field, "expected an integer");
    const auto v = j.get<std::int64_t>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw bad_field(field, "integer out of range");
    return static_cast<int>(v);
}

std::uint64_t get_u64(const json& j, const std::string& field) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
        throw bad_field(field, "expected a non-negative integer");
    return j.get<std::uint64_t>();
}

double get_real(const json& j, const std::string& field) {
    if (!j.is_number()) throw bad_field(field, "expected a number");
    return j.get<double>();
}

bool get_bool(const json& j, const std::string& field) {
    if (!j.is_boolean()) throw bad_field(field, "expected true or false");
    return j.get<bool>();
}

std::string get_string(const json& j, const std::string& field) {
    if (!j.is_string()) throw bad_field(field, "expected a string");
    return j.get<std::string>();
}

// Re-raises a parser or validator error under the JSON key it came from.
template <class F>
auto with_field(const std::string& field, F&& f) {
    try {
        return f();
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), field);
    }
}

json roi_json(const RoiRect& r) {
    return {{"row0", r.row0}, {"col0", r.col0}, {"rows", r.rows}, {"cols", r.cols}};
}

RoiRect parse_rect(const json& j, const std::string& field) {
    if (!j.is_object()) throw bad_field(field, "expected {row0, col0, rows, cols}");
    RoiRect r;
    for (const auto& [key, value] : j.items()) {
        const std::string f = field + "." + key;
        if (key == "row0") r.row0 = get_int(value, f);
        else if (key == "col0") r.col0 = get_int(value, f);
        else if (key == "rows") r.rows = get_int(value, f);
        else if (key == "cols") r.cols = get_int(value, f);
        else throw bad_field(f, "unknown key");
    }
    return r;
}

json point_json(const ConvergencePoint& p) {
    json j = {{"iteration", p.iteration}, {"residual_rms", p.residual_rms}};
    if (p.image_rmse) j["image_rmse"] = *p.image_rmse;
    return j;
}

json report_json(const RunReport& r) {
    return {{"time1", r.time1}, {"time2", r.time2}, {"min", r.min}, {"max", r.max},
            {"text", io::format_report(r)}};
}

bool is_terminal(const std::string& type) {
    return type == "report" || type == "error" || type == "cancelled";
}

struct Cancelled {};

std::string new_token(std::uint64_t counter) {
    static std::mt19937_64 rng{std::random_device{}()};
    static std::mutex rng_mutex;
    std::uint64_t r = 0;
    {
        std::lock_guard lk(rng_mutex);
        r = rng();
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "s%llu-%016llx", static_cast<unsigned long long>(counter),
                  static_cast<unsigned long long>(r));
    return buf;
}

}  // namespace

struct SessionState {
    std::string id;
    mutable std::mutex m;
    std::condition_variable cv;

    SessionConfig config;
    RunStatus phase = RunStatus::idle;
    std::optional<Sinogram> sinogram_upload;
    std::optional<ImageGrid> phantom_upload;

    // Owned by the worker while phase == running; request threads only call
    // request_cancel() on it then.
    std::unique_ptr<ReconSession> recon;

    // Published copies, readable at any time under m.
    std::vector<ConvergencePoint> history;
    std::shared_ptr<const ImageGrid> latest;
    std::optional<RunReport> report;
    std::size_t memory_estimate = 0;

    std::deque<Event> log;
    std::uint64_t next_seq = 1;

    std::optional<RoiRect> signal;
    std::optional<RoiRect> noise;

    std::thread worker;
    std::atomic<bool> cancel{false};
    bool closing = false;
    bool priority_elevated = false;
    std::string created;
    std::string updated;
    json last_error;

    void publish(std::string type, json data) {
        log.push_back(Event{next_seq++, std::move(type), std::move(data)});
        cv.notify_all();
    }

    // Drops everything derived from the data and options; uploads stay.
    void reset() {
        recon.reset();
        history.clear();
        latest.reset();
        report.reset();
        memory_estimate = 0;
        signal.reset();
        noise.reset();
        last_error = nullptr;
        phase = RunStatus::idle;
        log.clear();
        publish("reset", json::object());
    }

    void join_worker() {
        if (worker.joinable()) worker.join();
    }
};

// ---------------------------------------------------------------------------
// configuration

SessionConfig default_config(int max_threads) {
    SessionConfig c;
    c.run.threads = std::max(1, max_threads);
    return c;
}

json to_json(const SessionConfig& c) {
    const auto& g = c.run.geometry;
    json geometry = {{"nd", g.nd},   {"nv", g.nv},   {"nx", g.nx},
                     {"ny", g.ny},   {"sto", g.sto}, {"std", g.stdd},
                     {"pitch", nullptr}, {"pixel_size", g.pixel_size}, {"arc", g.arc}};
    if (g.pitch) geometry["pitch"] = *g.pitch;
    json noise = nullptr;
    if (c.run.noise) {
        const auto& n = *c.run.noise;
        noise = {{"model", n.model == NoiseModel::poisson ? "poisson" : "gaussian"},
                 {"i0", n.i0},
                 {"sigma", n.sigma},
                 {"seed", n.seed}};
    }
    return {{"geometry", geometry},
            {"algorithm", std::string(to_string(c.run.algorithm))},
            {"projector", std::string(to_string(c.run.projector))},
            {"threads", c.run.threads},
            {"lambda", c.run.sart.lambda},
            {"view_order", c.run.sart.view_order == ViewOrder::random ? "random" : "sequential"},
            {"order_seed", c.run.sart.order_seed},
            {"nonneg_clamp", c.run.sart.nonneg_clamp},
            {"simulation", c.run.simulation},
            {"noise", noise},
            {"roi", c.run.roi ? roi_json(*c.run.roi) : json(nullptr)},
            {"memory_cap_bytes", c.run.memory_cap_bytes},
            {"maintain_aspect_ratio", c.maintain_aspect_ratio},
            {"show_realtime_convergence", c.show_realtime_convergence},
            {"high_priority", c.high_priority}};
}

SessionConfig merge_config(const SessionConfig& base, const json& patch, int max_threads) {
    if (!patch.is_object()) throw bad_field("config", "expected a JSON object");
    SessionConfig c = base;
    auto& g = c.run.geometry;
    for (const auto& [key, value] : patch.items()) {
        if (key == "geometry") {
            if (!value.is_object()) throw bad_field("geometry", "expected an object");
            for (const auto& [gk, gv] : value.items()) {
                const std::string f = "geometry." + gk;
                if (gk == "nd") g.nd = get_int(gv, f);
                else if (gk == "nv") g.nv = get_int(gv, f);
                else if (gk == "nx") g.nx = get_int(gv, f);
                else if (gk == "ny") g.ny = get_int(gv, f);
                else if (gk == "sto") g.sto = get_real(gv, f);
                else if (gk == "std") g.stdd = get_real(gv, f);
                else if (gk == "pitch") g.pitch = gv.is_null() ? std::nullopt : std::optional(get_real(gv, f));
                else if (gk == "pixel_size") g.pixel_size = get_real(gv, f);
                else if (gk == "arc") g.arc = get_real(gv, f);
                else throw bad_field(f, "unknown key");
            }
        } else if (key == "algorithm") {
            c.run.algorithm = with_field(key, [&] { return parse_algorithm(get_string(value, key)); });
        } else if (key == "projector") {
            c.run.projector = with_field(key, [&] { return parse_projector_mode(get_string(value, key)); });
        } else if (key == "threads") {
            c.run.threads = get_int(value, key);
        } else if (key == "lambda") {
            c.run.sart.lambda = get_real(value, key);
        } else if (key == "view_order") {
            const auto s = get_string(value, key);
            if (s == "sequential") c.run.sart.view_order = ViewOrder::sequential;
            else if (s == "random") c.run.sart.view_order = ViewOrder::random;
            else throw bad_field(key, "expected 'sequential' or 'random'");
        } else if (key == "order_seed") {
            c.run.sart.order_seed = get_u64(value, key);
        } else if (key == "nonneg_clamp") {
            c.run.sart.nonneg_clamp = get_bool(value, key);
        } else if (key == "simulation") {
            c.run.simulation = get_bool(value, key);
        } else if (key == "noise") {
            if (value.is_null()) {
                c.run.noise.reset();
                continue;
            }
            if (!value.is_object()) throw bad_field(key, "expected an object or null");
            NoiseSpec n = c.run.noise.value_or(NoiseSpec{});
            for (const auto& [nk, nv] : value.items()) {
                const std::string f = "noise." + nk;
                if (nk == "model") {
                    const auto s = get_string(nv, f);
                    if (s == "poisson") n.model = NoiseModel::poisson;
                    else if (s == "gaussian" || s == "gauss") n.model = NoiseModel::gaussian;
                    else throw bad_field(f, "expected 'poisson' or 'gaussian'");
                } else if (nk == "i0") n.i0 = get_real(nv, f);
                else if (nk == "sigma") n.sigma = get_real(nv, f);
                else if (nk == "seed") n.seed = get_u64(nv, f);
                else throw bad_field(f, "unknown key");
            }
            c.run.noise = n;
        } else if (key == "roi") {
            c.run.roi = value.is_null() ? std::nullopt : std::optional(parse_rect(value, key));
        } else if (key == "memory_cap_bytes") {
            c.run.memory_cap_bytes = get_u64(value, key);
        } else if (key == "maintain_aspect_ratio") {
            c.maintain_aspect_ratio = get_bool(value, key);
        } else if (key == "show_realtime_convergence") {
            c.show_realtime_convergence = get_bool(value, key);
        } else if (key == "high_priority") {
            c.high_priority = get_bool(value, key);
        } else {
            throw bad_field(key, "unknown configuration key");
        }
    }
    try {
        validate(c.run.geometry);
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), "geometry." + (e.field() == "stdd" ? "std" : e.field()));
    }
    validate(c.run);
    if (c.run.threads > max_threads)
        throw Error(ErrorCode::invalid_argument,
                    "threads must be between 1 and the " + std::to_string(max_threads) +
                        " detected processors",
                    "threads");
    return c;
}

// ---------------------------------------------------------------------------
// snapshots

Snapshot make_snapshot(const ImageGrid& img) {
    Snapshot s;
    if (img.empty()) return s;
    std::tie(s.min, s.max) = min_max(img);
    const int side = std::max(img.nx(), img.ny());
    const int f = (side + kSnapshotMaxSide - 1) / kSnapshotMaxSide;
    s.width = (img.nx() + f - 1) / f;
    s.height = (img.ny() + f - 1) / f;
    s.pixels.assign(static_cast<std::size_t>(s.width) * s.height, 0);
    const double span = s.max - s.min;
    for (int br = 0; br < s.height; ++br)
        for (int bc = 0; bc < s.width; ++bc) {
            double sum = 0.0;
            int count = 0;
            for (int r = br * f; r < std::min(img.ny(), (br + 1) * f); ++r)
                for (int c = bc * f; c < std::min(img.nx(), (bc + 1) * f); ++c) {
                    sum += img.at(r, c);
                    ++count;
                }
            if (span > 0.0) {
                const double t = std::clamp((sum / count - s.min) / span, 0.0, 1.0);
                s.pixels[static_cast<std::size_t>(br) * s.width + bc] =
                    static_cast<std::uint8_t>(std::lround(t * 255.0));
            }
        }
    return s;
}

json to_json(const Snapshot& snap) {
    const std::string raw(snap.pixels.begin(), snap.pixels.end());
    return {{"width", snap.width},
            {"height", snap.height},
            {"min", snap.min},
            {"max", snap.max},
            {"encoding", "base64-u8"},
            {"pixels", httplib::detail::base64_encode(raw)}};
}

// ---------------------------------------------------------------------------
// subscription

Subscription::Subscription(std::shared_ptr<SessionState> state) : state_(std::move(state)) {}

std::vector<Event> Subscription::next(std::chrono::milliseconds timeout) {
    std::vector<Event> out;
    if (closed_) return out;
    SessionState& s = *state_;
    std::unique_lock lk(s.m);
    const auto finished = [&] {
        return s.phase != RunStatus::running && !s.log.empty() && is_terminal(s.log.back().type) &&
               cursor_ > s.log.back().seq;
    };
    const auto pending = [&] { return !s.log.empty() && s.log.back().seq >= cursor_; };
    s.cv.wait_for(lk, timeout, [&] { return s.closing || pending() || finished(); });

    for (const Event& e : s.log)
        if (e.seq >= cursor_) out.push_back(e);
    if (!out.empty()) cursor_ = out.back().seq + 1;

    // Only the newest iteration gets a preview; catch-up batches stay small.
    if (s.config.show_realtime_convergence && s.latest) {
        for (auto it = out.rbegin(); it != out.rend(); ++it) {
            if (it->type != "iteration") continue;
            if (it->data.value("iteration", std::int64_t{0}) == static_cast<std::int64_t>(s.history.size()))
                it->data["snapshot"] = to_json(make_snapshot(*s.latest));
            break;
        }
    }
    closed_ = s.closing || finished();
    return out;
}

// ---------------------------------------------------------------------------
// service

Service::Service(int max_threads) : max_threads_(max_threads > 0 ? max_threads : omp_get_num_procs()) {}

Service::~Service() {
    std::vector<std::shared_ptr<SessionState>> all;
    {
        std::lock_guard lk(mutex_);
        for (auto& [id, s] : sessions_) all.push_back(s);
        sessions_.clear();
    }
    for (auto& s : all) {
        {
            std::lock_guard lk(s->m);
            s->cancel = true;
            if (s->recon) s->recon->request_cancel();
            s->closing = true;
            s->cv.notify_all();
        }
        s->join_worker();
    }
}

json Service::capabilities() const {
    return {{"max_threads", max_threads_},
            {"algorithms", {"sart", "sbir"}},
            {"implemented_algorithms", {"sart"}},
            {"projectors", {"line", "area"}},
            {"view_orders", {"sequential", "random"}},
            {"noise_models", {"poisson", "gaussian"}},
            {"image_kinds", {"reconstruction", "original", "sinogram"}},
            {"image_formats", {"text", "pgm"}},
            {"snapshot_max_side", kSnapshotMaxSide},
            {"defaults", to_json(default_config(max_threads_))}};
}

std::shared_ptr<SessionState> Service::find(const std::string& id) const {
    std::lock_guard lk(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::not_found, "no session '" + id + "'", "id");
    return it->second;
}

namespace {

json describe_locked(const SessionState& s) {
    json j = {{"id", s.id},
              {"status", std::string(to_string(s.phase))},
              {"iteration", s.history.size()},
              {"config", to_json(s.config)},
              {"effective_pitch", effective_pitch(s.config.run.geometry)},
              {"data", {{"sinogram", s.sinogram_upload.has_value()}, {"phantom", s.phantom_upload.has_value()}}},
              {"memory_estimate", s.memory_estimate},
              {"priority_elevated", s.priority_elevated},
              {"created", s.created},
              {"updated", s.updated}};
    if (!s.last_error.is_null()) j["last_error"] = s.last_error;
    return j;
}

void require_not_running(const SessionState& s, const char* action) {
    if (s.phase == RunStatus::running)
        throw Error(ErrorCode::conflict, std::string("cannot ") + action + " while a run is in progress");
}

void require_done(const SessionState& s) {
    if (s.phase != RunStatus::done || !s.recon)
        throw Error(ErrorCode::conflict, "no completed reconstruction yet");
}

json region_json(const SessionState& s, const RoiRect& rect, bool noise_role) {
    const ImageGrid& x = s.recon->estimate();
    const double mean = region_mean(x, rect);
    const double sd = region_std(x, rect);
    const double value = noise_role ? sd : mean;
    json j = {{"rect", roi_json(rect)},
              {"mean", mean},
              {"std", sd},
              {"value", value},
              {"value_text", format_metric(value)}};
    if (const auto& original = s.recon->original()) {
        const double ov = noise_role ? region_std(*original, rect) : region_mean(*original, rect);
        const double mse = region_mse(x, *original, rect);
        j["original_value"] = ov;
        j["original_value_text"] = format_metric(ov);
        j["mse"] = mse;
        j["mse_text"] = format_metric(mse);
    }
    return j;
}

json regions_locked(const SessionState& s) {
    json j = {{"signal", nullptr}, {"noise", nullptr}};
    if (s.signal) j["signal"] = region_json(s, *s.signal, false);
    if (s.noise) j["noise"] = region_json(s, *s.noise, true);
    if (s.signal && s.noise) {
        const SnrResult r = snr(s.recon->estimate(), *s.signal, *s.noise);
        json v = {{"kind", r.kind == SnrKind::value       ? "value"
                           : r.kind == SnrKind::above_cap ? "above_cap"
                                                          : "not_available"},
                  {"text", format_snr(r)},
                  {"signal_mean", r.signal_mean},
                  {"noise_std", r.noise_std}};
        if (r.kind != SnrKind::not_available) v["value"] = r.value;
        j["snr"] = v;
    }
    return j;
}

void worker_main(std::shared_ptr<SessionState> s, SessionConfig config, int iterations, bool fresh,
                 bool build, std::optional<Sinogram> data, std::optional<ImageGrid> phantom) {
    try {
        if (build) {
            const int nv = config.run.geometry.nv;
            auto progress = [&](int views, std::size_t bytes) {
                std::lock_guard lk(s->m);
                s->memory_estimate = bytes;
                s->publish("matrix", {{"views_done", views}, {"views", nv}, {"memory_estimate", bytes}});
                if (s->cancel) throw Cancelled{};
            };
            PreparedRun prep = prepare(config.run, data ? &*data : nullptr, phantom ? &*phantom : nullptr, progress);
            const std::size_t bytes = prep.matrix->memory_estimate();
            const double seconds = prep.matrix_seconds;
            std::optional<Snapshot> sino_preview;
            if (config.run.simulation) {
                const Sinogram& p = prep.sinogram;
                sino_preview = make_snapshot(ImageGrid(p.nd(), p.nv(), std::vector<double>(p.values().begin(), p.values().end())));
            }
            auto recon = make_session(config.run, std::move(prep));
            std::lock_guard lk(s->m);
            s->recon = std::move(recon);
            s->memory_estimate = bytes;
            s->publish("matrix_ready", {{"time1", seconds}, {"memory_estimate", bytes}});
            if (sino_preview) s->publish("sinogram", {{"snapshot", to_json(*sino_preview)}});
            if (s->cancel) throw Cancelled{};
        }

        ReconSession* recon = nullptr;
        {
            std::lock_guard lk(s->m);
            recon = s->recon.get();
            if (fresh) {
                s->history.clear();
                s->latest.reset();
            }
        }
        const IterationCallback emit = [&](const IterationUpdate& u) {
            std::lock_guard lk(s->m);
            s->history.push_back(u.point);
            s->latest = u.snapshot;
            json data = point_json(u.point);
            data["memory_estimate"] = s->memory_estimate;
            s->publish("iteration", std::move(data));
            if (s->cancel) recon->request_cancel();
        };
        if (fresh)
            recon->run(iterations, emit);
        else
            recon->continue_run(iterations, emit);

        std::lock_guard lk(s->m);
        s->report = recon->report();
        s->latest = std::make_shared<const ImageGrid>(recon->estimate());
        json data = report_json(*s->report);
        data["memory_estimate"] = s->memory_estimate;
        data["iterations"] = s->history.size();
        data["cancelled"] = s->cancel.load();
        s->phase = RunStatus::done;
        s->updated = now_iso8601();
        s->publish("report", std::move(data));
    } catch (const Cancelled&) {
        std::lock_guard lk(s->m);
        s->recon.reset();
        s->memory_estimate = 0;
        s->phase = RunStatus::idle;
        s->publish("cancelled", json::object());
    } catch (const std::exception& e) {
        std::lock_guard lk(s->m);
        s->last_error = error_body(e);
        const bool usable = s->recon && s->recon->status() == RunStatus::done && !s->history.empty();
        if (!usable) {
            s->recon.reset();
            s->memory_estimate = 0;
        }
        s->phase = usable ? RunStatus::done : RunStatus::idle;
        s->publish("error", s->last_error);
    }
}

}  // namespace

json Service::create_session(const json& config) {
    auto s = std::make_shared<SessionState>();
    s->config = merge_config(default_config(max_threads_), config.is_null() ? json::object() : config,
                             max_threads_);
    s->created = s->updated = now_iso8601();
    std::lock_guard lk(mutex_);
    s->id = new_token(next_id_++);
    sessions_.emplace(s->id, s);
    std::lock_guard slk(s->m);
    return describe_locked(*s);
}

json Service::describe(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lk(s->m);
    return describe_locked(*s);
}

std::vector<std::string> Service::session_ids() const {
    std::lock_guard lk(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, s] : sessions_) ids.push_back(id);
    return ids;
}

void Service::delete_session(const std::string& id) {
    std::shared_ptr<SessionState> s;
    {
        std::lock_guard lk(mutex_);
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) throw Error(ErrorCode::not_found, "no session '" + id + "'", "id");
        s = it->second;
        sessions_.erase(it);
    }
    {
        std::lock_guard lk(s->m);
        s->cancel = true;
        if (s->recon) s->recon->request_cancel();
        s->closing = true;
        s->cv.notify_all();
    }
    s->join_worker();
}

json Service::update_config(const std::string& id, const json& patch) {
    auto s = find(id);
    std::lock_guard lk(s->m);
    require_not_running(*s, "change the configuration");
    SessionConfig next = merge_config(s->config, patch, max_threads_);
    const auto numeric = [](const SessionConfig& c) {
        json j = to_json(c);
        for (const char* k : {"maintain_aspect_ratio", "show_realtime_convergence", "high_priority"}) j.erase(k);
        return j;
    };
    const bool numeric_change = numeric(next) != numeric(s->config);
    s->config = std::move(next);
    s->updated = now_iso8601();
    // Anything that changes the numbers invalidates the matrix and the estimate.
    if (numeric_change && (s->recon || s->phase != RunStatus::idle)) s->reset();
    return describe_locked(*s);
}

json Service::upload(const std::string& id, std::string_view kind, std::string_view text) {
    auto s = find(id);
    std::lock_guard lk(s->m);
    require_not_running(*s, "upload data");
    const auto& g = s->config.run.geometry;
    if (kind == "sinogram") {
        if (s->config.run.simulation)
            throw Error(ErrorCode::conflict, "sinogram uploads need simulation mode off", "kind");
        s->sinogram_upload = io::parse_sinogram(text, g.nd, g.nv);
    } else if (kind == "phantom") {
        if (!s->config.run.simulation)
            throw Error(ErrorCode::conflict, "phantom uploads need simulation mode on", "kind");
        s->phantom_upload = io::parse_phantom(text, g.nx, g.ny);
    } else {
        throw Error(ErrorCode::invalid_argument,
                    "kind must be 'sinogram' or 'phantom', got '" + std::string(kind) + "'", "kind");
    }
    if (s->recon || s->phase != RunStatus::idle) s->reset();
    s->updated = now_iso8601();
    json j = describe_locked(*s);
    j["accepted"] = kind;
    return j;
}

json Service::launch(const std::shared_ptr<SessionState>& s, int iterations, bool fresh) {
    // Caller holds s->m.
    if (iterations < 1)
        throw Error(ErrorCode::invalid_argument, "iterations must be at least 1", "iterations");
    const RunConfig& run = s->config.run;
    if (run.algorithm == Algorithm::sbir)
        throw Error(ErrorCode::not_implemented, "algorithm 'sbir' is not implemented", "algorithm");

    const bool build = !s->recon;
    std::optional<Sinogram> data;
    std::optional<ImageGrid> phantom;
    if (build) {
        if (run.simulation) {
            if (!s->phantom_upload) throw Error(ErrorCode::conflict, "upload a phantom first", "phantom");
            phantom = s->phantom_upload;
        } else {
            if (!s->sinogram_upload) throw Error(ErrorCode::conflict, "upload a sinogram first", "sinogram");
            data = s->sinogram_upload;
        }
        if (run.memory_cap_bytes != 0) {
            const std::size_t need = predicted_matrix_bytes(run.geometry, run.projector);
            if (need > run.memory_cap_bytes)
                throw Error(ErrorCode::resource_exhausted,
                            "system matrix needs up to " + std::to_string(need) + " bytes, cap is " +
                                std::to_string(run.memory_cap_bytes),
                            "memory_cap_bytes");
        }
    }
    if (s->config.high_priority && !s->priority_elevated) {
        s->priority_elevated = raise_process_priority();
        if (!s->priority_elevated)
            std::clog << "fanrecon: could not raise process priority: " << std::strerror(errno)
                      << "; continuing at normal priority\n";
    }

    s->join_worker();
    if (fresh) {
        s->log.clear();
        s->report.reset();
    } else {
        std::erase_if(s->log, [](const Event& e) { return is_terminal(e.type); });
        s->report.reset();
    }
    s->last_error = nullptr;
    s->cancel = false;
    s->phase = RunStatus::running;
    s->updated = now_iso8601();
    s->cv.notify_all();
    s->worker = std::thread(worker_main, s, s->config, iterations, fresh, build, std::move(data),
                            std::move(phantom));
    return describe_locked(*s);
}

json Service::start_run(const std::string& id, int iterations) {
    auto s = find(id);
    std::lock_guard lk(s->m);
    require_not_running(*s, "start a run");
    return launch(s, iterations, true);
}

json Service::continue_run(const std::string& id, int iterations) {
    auto s = find(id);
    std::lock_guard lk(s->m);
    require_not_running(*s, "continue");
    if (s->phase != RunStatus::done || !s->recon)
        throw Error(ErrorCode::conflict, "continue needs a completed run");
    return launch(s, iterations, false);
}

json Service::restart(const std::string& id) {
    auto s = find(id);
    std::lock_guard lk(s->m);
    require_not_running(*s, "restart");
    s->join_worker();
    s->reset();
    s->updated = now_iso8601();
    return describe_locked(*s);
}

json Service::cancel(const std::string& id) {
    auto s = find(id);
    std::lock_guard lk(s->m);
    if (s->phase == RunStatus::running) {
        s->cancel = true;
        if (s->recon) s->recon->request_cancel();
    }
    return describe_locked(*s);
}

void Service::wait(const std::string& id) const {
    auto s = find(id);
    std::unique_lock lk(s->m);
    s->cv.wait(lk, [&] { return s->phase != RunStatus::running || s->closing; });
}

json Service::set_region(const std::string& id, std::string_view role, std::optional<RoiRect> rect) {
    auto s = find(id);
    std::lock_guard lk(s->m);
    if (role != "signal" && role != "noise")
        throw Error(ErrorCode::invalid_argument,
                    "role must be 'signal' or 'noise', got '" + std::string(role) + "'", "role");
    require_done(*s);
    if (rect && !rect->inside(s->config.run.geometry.nx, s->config.run.geometry.ny))
        throw Error(ErrorCode::out_of_range, "rectangle is empty or outside the reconstruction", "rect");
    (role == "signal" ? s->signal : s->noise) = rect;
    return regions_locked(*s);
}

json Service::regions(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lk(s->m);
    if (!s->signal && !s->noise) return {{"signal", nullptr}, {"noise", nullptr}};
    require_done(*s);
    return regions_locked(*s);
}

json Service::profile(const std::string& id, std::string_view axis_text, int index) const {
    auto s = find(id);
    std::lock_guard lk(s->m);
    const ProfileAxis axis = parse_profile_axis(axis_text);
    require_done(*s);
    json j = {{"axis", axis == ProfileAxis::horizontal ? "horizontal" : "vertical"},
              {"index", index},
              {"reconstruction", fanrecon::profile(s->recon->estimate(), axis, index)}};
    if (const auto& original = s->recon->original()) j["original"] = fanrecon::profile(*original, axis, index);
    return j;
}

json Service::report(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lk(s->m);
    if (s->phase != RunStatus::done || !s->report)
        throw Error(ErrorCode::conflict, "no completed run to report on");
    json j = report_json(*s->report);
    j["memory_estimate"] = s->memory_estimate;
    j["iterations"] = s->history.size();
    return j;
}

json Service::history(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lk(s->m);
    json points = json::array();
    for (const auto& p : s->history) points.push_back(point_json(p));
    return {{"status", std::string(to_string(s->phase))}, {"points", points}};
}

std::string Service::history_csv(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lk(s->m);
    return io::format_convergence_csv(s->history);
}

ImageGrid Service::image(const std::string& id, std::string_view which) const {
    auto s = find(id);
    std::lock_guard lk(s->m);
    if (which == "reconstruction") {
        if (s->latest) return *s->latest;
        throw Error(ErrorCode::conflict, "no reconstruction yet");
    }
    if (which == "original") {
        if (s->config.run.simulation && s->phantom_upload) return *s->phantom_upload;
        throw Error(ErrorCode::not_found, "no original image; upload a phantom in simulation mode");
    }
    if (which == "sinogram") {
        const Sinogram* p = nullptr;
        if (s->recon) p = &s->recon->sinogram();
        else if (!s->config.run.simulation && s->sinogram_upload) p = &*s->sinogram_upload;
        if (!p) throw Error(ErrorCode::conflict, "no sinogram yet");
        return ImageGrid(p->nd(), p->nv(), std::vector<double>(p->values().begin(), p->values().end()));
    }
    throw Error(ErrorCode::invalid_argument,
                "which must be reconstruction, original or sinogram, got '" + std::string(which) + "'",
                "which");
}

Subscription Service::subscribe(const std::string& id) const {
    return Subscription(find(id));
}

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument:
        case ErrorCode::out_of_range:
        case ErrorCode::invalid_geometry:
        case ErrorCode::dimension_mismatch:
        case ErrorCode::format:
        case ErrorCode::domain: return 400;
        case ErrorCode::not_found: return 404;
        case ErrorCode::conflict:
        case ErrorCode::invalid_state: return 409;
        case ErrorCode::not_implemented: return 501;
        case ErrorCode::resource_exhausted: return 507;
        case ErrorCode::io: return 500;
    }
    return 500;
}

json error_body(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        json j = {{"code", std::string(to_string(err->code()))}, {"message", err->what()}};
        if (!err->field().empty()) j["field"] = err->field();
        if (const auto* fe = dynamic_cast<const FormatError*>(&e); fe && fe->line() != 0)
            j["line"] = fe->line();
        return j;
    }
    return {{"code", "internal"}, {"message", e.what()}};
}

}  // namespace fanrecon::service
