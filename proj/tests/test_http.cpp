#include <catch_amalgamated.hpp>

#include <thread>

#include <httplib.h>

#include "fanrecon/http_server.hpp"
#include "fanrecon/io.hpp"
#include "fanrecon/simulate.hpp"

using namespace fanrecon;
using json = nlohmann::json;

namespace {

struct Harness {
    service::Service svc{2};
    httplib::Server server;
    std::thread thread;
    int port = 0;

    Harness() {
        service::mount_api(server, svc);
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~Harness() {
        server.stop();
        thread.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(60, 0);
        return c;
    }
};

struct SseEvent {
    std::string id, type, data;
};

std::vector<SseEvent> parse_sse(const std::string& text) {
    std::vector<SseEvent> out;
    SseEvent cur;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        const std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) {
            if (!cur.type.empty()) out.push_back(cur);
            cur = {};
        } else if (line.rfind("id: ", 0) == 0) {
            cur.id = line.substr(4);
        } else if (line.rfind("event: ", 0) == 0) {
            cur.type = line.substr(7);
        } else if (line.rfind("data: ", 0) == 0) {
            cur.data = line.substr(6);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("full session over HTTP") {
    Harness h;
    auto c = h.client();

    auto caps = c.Get("/api/capabilities");
    REQUIRE(caps);
    CHECK(caps->status == 200);
    CHECK(json::parse(caps->body)["max_threads"] == 2);
    CHECK(caps->get_header_value("Access-Control-Allow-Origin") == "*");

    const json cfg = {{"geometry", {{"nd", 21}, {"nv", 16}, {"nx", 10}, {"ny", 10}}},
                      {"simulation", true},
                      {"threads", 1}};
    auto created = c.Post("/api/sessions", cfg.dump(), "application/json");
    REQUIRE(created);
    REQUIRE(created->status == 201);
    const std::string id = json::parse(created->body)["id"];
    const std::string base = "/api/sessions/" + id;

    auto bad = c.Put(base + "/config", R"({"geometry":{"nx":-1}})", "application/json");
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body)["field"] == "geometry.nx");
    CHECK(c.Put(base + "/config", "{not json", "application/json")->status == 400);
    CHECK(c.Get("/api/sessions/nope")->status == 404);
    CHECK(c.Post(base + "/run", R"({"iterations":3})", "application/json")->status == 409);

    auto short_data = c.Post(base + "/data?kind=phantom", "1\n2\n", "text/plain");
    CHECK(short_data->status == 400);
    CHECK(json::parse(short_data->body)["line"] == 3);
    const ImageGrid ph = disk_phantom(10, 10, 3.5);
    CHECK(c.Post(base + "/data?kind=phantom", io::format_values(ph.values()), "text/plain")->status == 200);

    CHECK(c.Post(base + "/run?iterations=5", "", "text/plain")->status == 202);
    auto events = c.Get(base + "/events");
    REQUIRE(events);
    CHECK(events->get_header_value("Content-Type").rfind("text/event-stream", 0) == 0);
    const auto evs = parse_sse(events->body);
    REQUIRE_FALSE(evs.empty());
    CHECK(evs.back().type == "report");
    int iterations = 0;
    for (const auto& e : evs) iterations += e.type == "iteration";
    CHECK(iterations == 5);
    CHECK(json::parse(evs.back().data).contains("time1"));

    auto rep = c.Get(base + "/report");
    CHECK(rep->status == 200);
    CHECK(json::parse(rep->body)["iterations"] == 5);

    CHECK(c.Post(base + "/continue", R"({"iterations":2})", "application/json")->status == 202);
    const auto more = parse_sse(c.Get(base + "/events")->body);
    CHECK(more.back().type == "report");
    auto hist = c.Get(base + "/history");
    CHECK(json::parse(hist->body)["points"].size() == 7);
    auto csv = c.Get(base + "/history?format=csv");
    CHECK(std::count(csv->body.begin(), csv->body.end(), '\n') == 8);

    auto img = c.Get(base + "/image?which=reconstruction");
    CHECK(img->status == 200);
    CHECK(img->get_header_value("X-Image-Width") == "10");
    CHECK(io::parse_phantom(img->body, 10, 10) == h.svc.image(id, "reconstruction"));
    auto pgm = c.Get(base + "/image?which=original&format=pgm");
    CHECK(pgm->body.rfind("P5\n10 10\n65535\n", 0) == 0);

    auto sig = c.Put(base + "/regions/signal", R"({"row0":4,"col0":4,"rows":2,"cols":2})", "application/json");
    CHECK(sig->status == 200);
    auto noi = c.Put(base + "/regions/noise", R"({"row0":0,"col0":0,"rows":3,"cols":3})", "application/json");
    CHECK(json::parse(noi->body).contains("snr"));
    CHECK(c.Delete(base + "/regions/noise")->status == 200);
    auto prof = c.Get(base + "/profile?axis=horizontal&index=5");
    CHECK(json::parse(prof->body)["reconstruction"].size() == 10);
    CHECK(c.Get(base + "/profile?axis=sideways&index=5")->status == 400);

    CHECK(c.Post(base + "/restart", "", "text/plain")->status == 200);
    CHECK(c.Get(base + "/report")->status == 409);
    CHECK(c.Put(base + "/config", R"({"algorithm":"sbir"})", "application/json")->status == 200);
    auto sbir = c.Post(base + "/run", R"({"iterations":1})", "application/json");
    CHECK(sbir->status == 501);
    CHECK(json::parse(sbir->body)["code"] == "not_implemented");

    CHECK(c.Delete(base)->status == 204);
    CHECK(c.Get(base)->status == 404);
    auto opts = c.Options("/api/sessions");
    CHECK(opts->status == 204);
}
