#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "fanrecon/http_server.hpp"

namespace {
httplib::Server* g_server = nullptr;
void stop(int) {
    if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reconstruction session service (JSON + server-sent events)"};
    std::string host = "127.0.0.1";
    int port = 8080;
    int max_threads = 0;
    app.add_option("--host", host, "Address to bind")->capture_default_str();
    app.add_option("--port", port, "Port to listen on")->capture_default_str();
    app.add_option("--max-threads", max_threads, "Thread cap offered to clients (0: detected processors)");
    CLI11_PARSE(app, argc, argv);

    fanrecon::service::Service service(max_threads);
    httplib::Server server;
    fanrecon::service::mount_api(server, service);
    g_server = &server;
    std::signal(SIGINT, stop);
    std::signal(SIGTERM, stop);

    if (!server.bind_to_port(host, port)) {
        std::cerr << "cannot listen on " << host << ":" << port << "\n";
        return 3;
    }
    std::cout << "listening on http://" << host << ":" << port << " (" << service.max_threads()
              << " processors)" << std::endl;
    server.listen_after_bind();
    return 0;
}
