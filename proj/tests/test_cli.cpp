#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "fanrecon/cli.hpp"
#include "fanrecon/io.hpp"
#include "fanrecon/service.hpp"
#include "fanrecon/simulate.hpp"

using namespace fanrecon;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "fanrecon");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "fanrecon_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::map<std::string, std::string> report_fields(const std::string& text) {
    std::map<std::string, std::string> m;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
}

}  // namespace

TEST_CASE("argument parsing") {
    const char* argv[] = {"fanrecon", "--phantom", "p.txt", "--nd", "40", "--nv", "30", "--nx", "16",
                          "--ny", "12", "--projector", "area", "--lambda", "0.5", "--noise", "poisson:1e4",
                          "--seed", "7", "--roi", "1,2,3,4", "--threads", "2", "--iterations", "5"};
    const auto c = cli::parse_args(static_cast<int>(std::size(argv)), argv);
    CHECK(c.run.simulation);
    CHECK(c.input == "p.txt");
    CHECK(c.run.geometry.nd == 40);
    CHECK(c.run.geometry.nv == 30);
    CHECK(c.run.geometry.nx == 16);
    CHECK(c.run.geometry.ny == 12);
    CHECK(c.run.projector == ProjectorMode::area);
    CHECK(c.run.sart.lambda == 0.5);
    REQUIRE(c.run.noise);
    CHECK(c.run.noise->i0 == 1e4);
    CHECK(c.run.noise->seed == 7);
    CHECK(c.run.roi == RoiRect{1, 2, 3, 4});
    CHECK(c.run.threads == 2);
    CHECK(c.iterations == 5);

    const char* plain[] = {"fanrecon", "--sinogram", "s.txt"};
    const auto d = cli::parse_args(3, plain);
    CHECK_FALSE(d.run.simulation);
    CHECK(d.iterations == 10);
    CHECK(d.run.threads >= 1);
}

TEST_CASE("usage errors exit 1 and name the flag") {
    CHECK(run({}).code == 1);
    CHECK(run({"--sinogram", "a", "--phantom", "b"}).code == 1);
    CHECK(run({"--sinogram", "a", "--noise", "poisson:10"}).code == 1);
    const auto bad = run({"--phantom", "a", "--lambda", "2.5"});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("lambda") != std::string::npos);
    const auto nd = run({"--sinogram", "a", "--nd", "0"});
    CHECK(nd.code == 1);
    CHECK(nd.err.find("nd") != std::string::npos);
    CHECK(run({"--sinogram", "a", "--projector", "cone"}).code == 1);
    CHECK(run({"--sinogram", "a", "--bogus"}).code == 1);
    const auto help = run({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("--sinogram") != std::string::npos);
}

TEST_CASE("data problems exit 2, runtime problems exit 3") {
    const auto dir = fresh_dir("codes");
    io::write_file(dir / "short.txt", "1\n2\n");
    const auto shrt = run({"--sinogram", (dir / "short.txt").string(), "--nd", "4", "--nv", "3", "--nx", "4",
                           "--ny", "4", "--out", (dir / "o").string()});
    CHECK(shrt.code == 2);
    CHECK(shrt.err.find("expected 12 values, found 2") != std::string::npos);
    CHECK(run({"--sinogram", (dir / "missing.txt").string(), "--out", (dir / "o").string()}).code == 2);

    io::write_file(dir / "ok.txt", io::format_values(std::vector<double>(12, 0.5)));
    const auto sbir = run({"--sinogram", (dir / "ok.txt").string(), "--nd", "4", "--nv", "3", "--nx", "4",
                           "--ny", "4", "--algorithm", "sbir", "--out", (dir / "o").string()});
    CHECK(sbir.code == 3);
    CHECK(sbir.err.find("not implemented") != std::string::npos);
    CHECK(run({"--sinogram", (dir / "ok.txt").string(), "--nd", "4", "--nv", "3", "--nx", "4", "--ny", "4",
               "--out", "/proc/fanrecon-cannot-write"})
              .code == 3);
}

TEST_CASE("simulation run writes every artefact") {
    const auto dir = fresh_dir("sim");
    io::save_image_text(disk_phantom(12, 12, 4.0), dir / "phantom.txt");
    const auto r = run({"--phantom", (dir / "phantom.txt").string(), "--nd", "25", "--nv", "30", "--nx", "12",
                        "--ny", "12", "--iterations", "7", "--noise", "gauss:0.01", "--seed", "3", "--out",
                        (dir / "out").string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"report.txt", "convergence.csv", "reconstruction.txt", "reconstruction.pgm", "sinogram.txt"})
        CHECK(fs::exists(dir / "out" / f));
    const auto fields = report_fields(r.out);
    for (const char* k : {"time1", "time2", "min", "max"}) CHECK(fields.contains(k));
    CHECK(io::read_file(dir / "out" / "report.txt") == r.out);
    const auto hist = io::load_convergence_csv(dir / "out" / "convergence.csv");
    REQUIRE(hist.size() == 7);
    CHECK(hist[6].image_rmse.has_value());
    const ImageGrid x = io::load_phantom_text(dir / "out" / "reconstruction.txt", 12, 12);
    CHECK(x.at(6, 6) > 0.5);
    CHECK(io::load_sinogram_text(dir / "out" / "sinogram.txt", 25, 30).size() == 750u);
}

TEST_CASE("cli and service produce the same reconstruction") {
    const auto dir = fresh_dir("same");
    const ImageGrid ph = shepp_logan(16, 16);
    io::save_image_text(ph, dir / "phantom.txt");
    const auto r = run({"--phantom", (dir / "phantom.txt").string(), "--nd", "31", "--nv", "24", "--nx", "16",
                        "--ny", "16", "--iterations", "12", "--threads", "3", "--lambda", "0.8", "--noise",
                        "poisson:1e5", "--seed", "11", "--out", (dir / "out").string()});
    REQUIRE(r.code == 0);

    service::Service svc(4);
    const auto id = svc.create_session({{"geometry", {{"nd", 31}, {"nv", 24}, {"nx", 16}, {"ny", 16}}},
                                        {"simulation", true},
                                        {"threads", 2},
                                        {"lambda", 0.8},
                                        {"noise", {{"model", "poisson"}, {"i0", 1e5}, {"seed", 11}}}})["id"]
                        .get<std::string>();
    svc.upload(id, "phantom", io::format_values(ph.values()));
    svc.start_run(id, 12);
    svc.wait(id);
    const ImageGrid x = svc.image(id, "reconstruction");
    CHECK(io::format_values(x.values()) == io::read_file(dir / "out" / "reconstruction.txt"));
    const auto rep = svc.report(id);
    const auto fields = report_fields(r.out);
    CHECK(fields.at("min") == io::format_real(rep["min"].get<double>()));
    CHECK(fields.at("max") == io::format_real(rep["max"].get<double>()));
    for (const char* k : {"time1", "time2", "min", "max"}) CHECK(rep.contains(k));
    CHECK(svc.history_csv(id) == io::read_file(dir / "out" / "convergence.csv"));
}
