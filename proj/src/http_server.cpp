#include "fanrecon/http_server.hpp"

#include <charconv>

#include "fanrecon/errors.hpp"
#include "fanrecon/io.hpp"

namespace fanrecon::service {

namespace {

using httplib::Request;
using httplib::Response;

void send_json(Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json body_json(const Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::invalid_argument, std::string("request body is not valid JSON: ") + e.what(), "body");
    }
}

int int_param(const Request& req, const json& body, const std::string& name) {
    if (req.has_param(name)) {
        const std::string text = req.get_param_value(name);
        int value = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
            throw Error(ErrorCode::invalid_argument, name + " must be an integer, got '" + text + "'", name);
        return value;
    }
    if (body.is_object() && body.contains(name)) {
        if (!body[name].is_number_integer())
            throw Error(ErrorCode::invalid_argument, name + " must be an integer", name);
        return body[name].get<int>();
    }
    throw Error(ErrorCode::invalid_argument, "missing parameter '" + name + "'", name);
}

std::string str_param(const Request& req, const std::string& name, const std::string& fallback = {}) {
    if (req.has_param(name)) return req.get_param_value(name);
    if (!fallback.empty()) return fallback;
    throw Error(ErrorCode::invalid_argument, "missing parameter '" + name + "'", name);
}

// Wraps a handler so every library error becomes {code, message, field?}.
template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const Request& req, Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_json(res, error_body(e), http_status(e.code()));
        } catch (const std::exception& e) {
            send_json(res, error_body(e), 500);
        }
    };
}

std::string sse_frame(const Event& e) {
    return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + e.data.dump() + "\n\n";
}

}  // namespace

void mount_api(httplib::Server& server, Service& service) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS"}});
    server.Options(R"(/api/.*)", [](const Request&, Response& res) { res.status = 204; });

    server.Get("/api/capabilities", guarded([&](const Request&, Response& res) {
        send_json(res, service.capabilities());
    }));
    server.Get("/api/sessions", guarded([&](const Request&, Response& res) {
        json ids = json::array();
        for (const auto& id : service.session_ids()) ids.push_back(id);
        send_json(res, {{"sessions", ids}});
    }));
    server.Post("/api/sessions", guarded([&](const Request& req, Response& res) {
        send_json(res, service.create_session(body_json(req)), 201);
    }));
    server.Get("/api/sessions/:id", guarded([&](const Request& req, Response& res) {
        send_json(res, service.describe(req.path_params.at("id")));
    }));
    server.Delete("/api/sessions/:id", guarded([&](const Request& req, Response& res) {
        service.delete_session(req.path_params.at("id"));
        res.status = 204;
    }));
    server.Put("/api/sessions/:id/config", guarded([&](const Request& req, Response& res) {
        send_json(res, service.update_config(req.path_params.at("id"), body_json(req)));
    }));
    server.Post("/api/sessions/:id/data", guarded([&](const Request& req, Response& res) {
        send_json(res, service.upload(req.path_params.at("id"), str_param(req, "kind"), req.body));
    }));
    server.Post("/api/sessions/:id/run", guarded([&](const Request& req, Response& res) {
        send_json(res, service.start_run(req.path_params.at("id"), int_param(req, body_json(req), "iterations")), 202);
    }));
    server.Post("/api/sessions/:id/continue", guarded([&](const Request& req, Response& res) {
        send_json(res, service.continue_run(req.path_params.at("id"), int_param(req, body_json(req), "iterations")), 202);
    }));
    server.Post("/api/sessions/:id/restart", guarded([&](const Request& req, Response& res) {
        send_json(res, service.restart(req.path_params.at("id")));
    }));
    server.Post("/api/sessions/:id/cancel", guarded([&](const Request& req, Response& res) {
        send_json(res, service.cancel(req.path_params.at("id")));
    }));

    server.Get("/api/sessions/:id/events", guarded([&](const Request& req, Response& res) {
        auto sub = std::make_shared<Subscription>(service.subscribe(req.path_params.at("id")));
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [sub](std::size_t, httplib::DataSink& sink) {
            if (!sink.is_writable()) return false;
            const auto events = sub->next(std::chrono::milliseconds(500));
            std::string out;
            for (const auto& e : events) out += sse_frame(e);
            if (out.empty() && !sub->closed()) out = ": keep-alive\n\n";
            if (!out.empty() && !sink.write(out.data(), out.size())) return false;
            if (sub->closed()) sink.done();
            return true;
        });
    }));

    server.Get("/api/sessions/:id/regions", guarded([&](const Request& req, Response& res) {
        send_json(res, service.regions(req.path_params.at("id")));
    }));
    server.Put("/api/sessions/:id/regions/:role", guarded([&](const Request& req, Response& res) {
        const json b = body_json(req);
        RoiRect r;
        try {
            r = {b.at("row0").get<int>(), b.at("col0").get<int>(), b.at("rows").get<int>(), b.at("cols").get<int>()};
        } catch (const json::exception&) {
            throw Error(ErrorCode::invalid_argument, "rectangle needs integer row0, col0, rows, cols", "rect");
        }
        send_json(res, service.set_region(req.path_params.at("id"), req.path_params.at("role"), r));
    }));
    server.Delete("/api/sessions/:id/regions/:role", guarded([&](const Request& req, Response& res) {
        send_json(res, service.set_region(req.path_params.at("id"), req.path_params.at("role"), std::nullopt));
    }));
    server.Get("/api/sessions/:id/profile", guarded([&](const Request& req, Response& res) {
        send_json(res, service.profile(req.path_params.at("id"), str_param(req, "axis"),
                                       int_param(req, json::object(), "index")));
    }));
    server.Get("/api/sessions/:id/report", guarded([&](const Request& req, Response& res) {
        send_json(res, service.report(req.path_params.at("id")));
    }));
    server.Get("/api/sessions/:id/history", guarded([&](const Request& req, Response& res) {
        const auto& id = req.path_params.at("id");
        if (str_param(req, "format", "json") == "csv")
            res.set_content(service.history_csv(id), "text/csv");
        else
            send_json(res, service.history(id));
    }));
    server.Get("/api/sessions/:id/image", guarded([&](const Request& req, Response& res) {
        const ImageGrid img = service.image(req.path_params.at("id"), str_param(req, "which", "reconstruction"));
        const std::string format = str_param(req, "format", "text");
        if (format == "text") {
            res.set_header("X-Image-Width", std::to_string(img.nx()));
            res.set_header("X-Image-Height", std::to_string(img.ny()));
            res.set_content(io::format_values(img.values()), "text/plain");
        } else if (format == "pgm") {
            res.set_content(io::encode_pgm(img), "image/x-portable-graymap");
        } else {
            throw Error(ErrorCode::invalid_argument, "format must be text or pgm", "format");
        }
    }));
}

}  // namespace fanrecon::service
