// Reference implementation of the external-predictor wire protocol: answers
// each request line with constant-velocity extrapolation repeated over the
// requested number of samples. Doubles as a test fixture (--delay-ms,
// --samples-override) and as a template for wiring in a real model server.

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

using nlohmann::json;

namespace {

struct Options {
    int delay_ms = 0;
    int samples_override = -1;  // reply with a wrong sample count when >= 0
    int port = 0;               // 0: stdio mode
    bool truncate = false;      // reply with malformed JSON
};

std::string handle(const std::string& line, const Options& opt) {
    if (opt.delay_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(opt.delay_ms));
    }
    const json request = json::parse(line);
    const double dt = request.at("dt").get<double>();
    const std::size_t horizon = request.at("horizon").get<std::size_t>();
    std::size_t samples = request.at("samples").get<std::size_t>();
    if (opt.samples_override >= 0) samples = static_cast<std::size_t>(opt.samples_override);

    json preds = json::array();
    for (const json& track : request.at("tracks")) {
        const std::size_t k = track.size();
        const double x1 = track.at(k - 1).at(0).get<double>();
        const double y1 = track.at(k - 1).at(1).get<double>();
        const double x0 = track.at(k - 2).at(0).get<double>();
        const double y0 = track.at(k - 2).at(1).get<double>();
        const double vx = (x1 - x0) / dt;
        const double vy = (y1 - y0) / dt;
        json traj = json::array();
        for (std::size_t h = 1; h <= horizon; ++h) {
            traj.push_back({x1 + vx * dt * static_cast<double>(h),
                            y1 + vy * dt * static_cast<double>(h)});
        }
        json per_ped = json::array();
        for (std::size_t s = 0; s < samples; ++s) per_ped.push_back(traj);
        preds.push_back(std::move(per_ped));
    }
    json response;
    response["v"] = 1;
    response["preds"] = std::move(preds);
    std::string text = response.dump();
    if (opt.truncate) text = text.substr(0, text.size() / 2);
    return text;
}

int serve_stdio(const Options& opt) {
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        std::cout << handle(line, opt) << "\n" << std::flush;
    }
    return 0;
}

int serve_tcp(const Options& opt) {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) return 2;
    const int one = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(opt.port));
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listener, 1) != 0) {
        std::cerr << "cvm_server: cannot listen on port " << opt.port << "\n";
        return 2;
    }
    std::cerr << "cvm_server: listening on 127.0.0.1:" << opt.port << "\n";
    while (true) {
        const int fd = ::accept(listener, nullptr, nullptr);
        if (fd < 0) continue;
        std::string buffer;
        char chunk[4096];
        while (true) {
            const ssize_t n = ::read(fd, chunk, sizeof(chunk));
            if (n <= 0) break;
            buffer.append(chunk, static_cast<std::size_t>(n));
            std::size_t newline;
            while ((newline = buffer.find('\n')) != std::string::npos) {
                const std::string line = buffer.substr(0, newline);
                buffer.erase(0, newline + 1);
                if (line.empty()) continue;
                const std::string reply = handle(line, opt) + "\n";
                if (::write(fd, reply.data(), reply.size()) < 0) break;
            }
        }
        ::close(fd);
    }
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    CLI::App app{"constant-velocity reference server for the prediction wire protocol"};
    app.add_option("--delay-ms", opt.delay_ms, "delay each response");
    app.add_option("--samples-override", opt.samples_override, "reply with this sample count");
    app.add_option("--port", opt.port, "serve TCP on 127.0.0.1:<port> instead of stdio");
    app.add_flag("--truncate", opt.truncate, "reply with malformed JSON");
    CLI11_PARSE(app, argc, argv);

    try {
        return opt.port > 0 ? serve_tcp(opt) : serve_stdio(opt);
    } catch (const std::exception& e) {
        std::cerr << "cvm_server: " << e.what() << "\n";
        return 2;
    }
}
