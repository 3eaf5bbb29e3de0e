#include "fanrecon/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fanrecon/errors.hpp"
#include "fanrecon/metrics.hpp"

namespace fanrecon::io {

namespace {

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool parse_real(std::string_view token, double& out) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    if (token.empty()) return false;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

std::string fixed(double v, int decimals) {
    char buf[400];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    return std::string(buf, r.ptr);
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

}  // namespace

std::string format_real(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

std::vector<double> parse_values(std::string_view text, std::size_t expected) {
    std::vector<double> values;
    values.reserve(expected);
    std::size_t first_blank = 0;
    std::size_t line_no = 0;
    for (const auto raw : split_lines(text)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty()) {
            if (first_blank == 0) first_blank = line_no;
            continue;
        }
        if (first_blank != 0)
            throw FormatError("line " + std::to_string(first_blank) +
                                  ": blank line before the end of the data",
                              first_blank);
        if (values.size() == expected)
            throw FormatError("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(expected) + " values, found more",
                              line_no);
        double v = 0.0;
        if (!parse_real(line, v))
            throw FormatError("line " + std::to_string(line_no) + ": cannot parse '" +
                                  std::string(line) + "' as one finite real number",
                              line_no);
        values.push_back(v);
    }
    if (values.size() != expected)
        throw FormatError("expected " + std::to_string(expected) + " values, found " +
                              std::to_string(values.size()) + " (first missing value at line " +
                              std::to_string(values.size() + 1) + ")",
                          values.size() + 1);
    return values;
}

Sinogram parse_sinogram(std::string_view text, int nd, int nv) {
    if (nd < 1 || nv < 1) throw Error(ErrorCode::invalid_argument, "nd and nv must be positive");
    return Sinogram(nd, nv, parse_values(text, static_cast<std::size_t>(nd) * nv));
}

ImageGrid parse_phantom(std::string_view text, int nx, int ny) {
    if (nx < 1 || ny < 1) throw Error(ErrorCode::invalid_argument, "nx and ny must be positive");
    return ImageGrid(nx, ny, parse_values(text, static_cast<std::size_t>(nx) * ny));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::io, "failed writing '" + path.string() + "'");
}

Sinogram load_sinogram_text(const std::filesystem::path& path, int nd, int nv) {
    return parse_sinogram(read_file(path), nd, nv);
}

ImageGrid load_phantom_text(const std::filesystem::path& path, int nx, int ny) {
    return parse_phantom(read_file(path), nx, ny);
}

std::string format_values(std::span<const double> values) {
    std::string out;
    out.reserve(values.size() * 24);
    for (const double v : values) {
        out += format_real(v);
        out += '\n';
    }
    return out;
}

void save_sinogram_text(const Sinogram& p, const std::filesystem::path& path) {
    write_file(path, format_values(p.values()));
}

void save_image_text(const ImageGrid& img, const std::filesystem::path& path) {
    write_file(path, format_values(img.values()));
}

std::string format_convergence_csv(const std::vector<ConvergencePoint>& history) {
    const bool with_rmse =
        std::any_of(history.begin(), history.end(), [](const auto& p) { return p.image_rmse.has_value(); });
    std::string out = with_rmse ? "iteration,residual_rms,image_rmse\n" : "iteration,residual_rms\n";
    for (const auto& p : history) {
        out += std::to_string(p.iteration);
        out += ',';
        out += format_real(p.residual_rms);
        if (with_rmse) {
            out += ',';
            out += p.image_rmse ? format_real(*p.image_rmse) : std::string();
        }
        out += '\n';
    }
    return out;
}

void save_convergence_csv(const std::vector<ConvergencePoint>& history,
                          const std::filesystem::path& path) {
    write_file(path, format_convergence_csv(history));
}

std::vector<ConvergencePoint> load_convergence_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    const auto lines = split_lines(text);
    if (lines.empty()) throw FormatError("missing CSV header", 1);
    const auto header = trim(lines[0]);
    bool with_rmse = false;
    if (header == "iteration,residual_rms,image_rmse")
        with_rmse = true;
    else if (header != "iteration,residual_rms")
        throw FormatError("line 1: unexpected CSV header '" + std::string(header) + "'", 1);

    std::vector<ConvergencePoint> out;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        const auto line = trim(lines[n]);
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        const std::size_t want = with_rmse ? 3 : 2;
        ConvergencePoint p;
        double it = 0.0;
        if (fields.size() != want || !parse_real(fields[0], it) || !parse_real(fields[1], p.residual_rms))
            throw FormatError("line " + std::to_string(n + 1) + ": malformed convergence row", n + 1);
        p.iteration = static_cast<std::int64_t>(it);
        if (with_rmse && !fields[2].empty()) {
            double v = 0.0;
            if (!parse_real(fields[2], v))
                throw FormatError("line " + std::to_string(n + 1) + ": malformed image_rmse", n + 1);
            p.image_rmse = v;
        }
        out.push_back(p);
    }
    return out;
}

std::string format_report(const RunReport& report) {
    std::string out;
    out += "time1=" + fixed(report.time1, 3) + "\n";
    out += "time2=" + fixed(report.time2, 3) + "\n";
    out += "min=" + format_real(report.min) + "\n";
    out += "max=" + format_real(report.max) + "\n";
    return out;
}

void save_report(const RunReport& report, const std::filesystem::path& path) {
    write_file(path, format_report(report));
}

std::string encode_pgm(const ImageGrid& img, std::optional<std::pair<double, double>> window) {
    if (img.size() == 0) throw Error(ErrorCode::invalid_argument, "cannot export an empty image");
    double lo = 0.0;
    double hi = 0.0;
    if (window) {
        std::tie(lo, hi) = *window;
        if (!(lo < hi))
            throw Error(ErrorCode::invalid_argument, "display window needs lo < hi", "window");
    } else {
        std::tie(lo, hi) = min_max(img);
    }
    std::string out = "P5\n" + std::to_string(img.nx()) + " " + std::to_string(img.ny()) + "\n65535\n";
    const std::size_t header = out.size();
    out.resize(header + 2 * img.size());
    const double span = hi - lo;
    for (std::size_t j = 0; j < img.size(); ++j) {
        unsigned level = 0;
        if (span > 0.0) {
            const double t = std::clamp((img.values()[j] - lo) / span, 0.0, 1.0);
            level = static_cast<unsigned>(std::lround(t * 65535.0));
        }
        out[header + 2 * j] = static_cast<char>((level >> 8) & 0xff);
        out[header + 2 * j + 1] = static_cast<char>(level & 0xff);
    }
    return out;
}

void export_pgm(const ImageGrid& img, const std::filesystem::path& path,
                std::optional<std::pair<double, double>> window) {
    write_file(path, encode_pgm(img, window));
}

}  // namespace fanrecon::io
