#include "crowdnav/predict/external.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

#include "json.hpp"

namespace crowdnav {

using nlohmann::json;

ExternalPredictor::ExternalPredictor(std::string endpoint, int timeout_ms)
    : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms) {
    if (endpoint_.rfind("cmd:", 0) == 0) {
        spawn(endpoint_.substr(4));
    } else if (endpoint_.rfind("tcp:", 0) == 0) {
        const std::string rest = endpoint_.substr(4);
        const auto colon = rest.rfind(':');
        if (colon == std::string::npos) {
            throw PredictorError("external predictor: endpoint must be tcp:<host>:<port>");
        }
        connect_tcp(rest.substr(0, colon), std::stoi(rest.substr(colon + 1)));
    } else {
        throw PredictorError("external predictor: endpoint must start with cmd: or tcp:");
    }
}

ExternalPredictor::~ExternalPredictor() {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0 && read_fd_ != write_fd_) ::close(read_fd_);
    if (child_pid_ > 0) {
        int status = 0;
        if (::waitpid(static_cast<pid_t>(child_pid_), &status, WNOHANG) == 0) {
            ::kill(static_cast<pid_t>(child_pid_), SIGTERM);
            ::waitpid(static_cast<pid_t>(child_pid_), &status, 0);
        }
    }
}

void ExternalPredictor::spawn(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
        throw PredictorError("external predictor: pipe() failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw PredictorError("external predictor: fork() failed");
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), nullptr);
        _exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    child_pid_ = pid;
}

void ExternalPredictor::connect_tcp(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* info = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &info) != 0 || !info) {
        throw PredictorError("external predictor: cannot resolve " + host);
    }
    int fd = -1;
    for (addrinfo* a = info; a; a = a->ai_next) {
        fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(info);
    if (fd < 0) throw PredictorError("external predictor: cannot connect to " + endpoint_);
    write_fd_ = fd;
    read_fd_ = fd;
}

std::string ExternalPredictor::exchange_line(const std::string& request) {
    std::string line = request;
    line.push_back('\n');
    std::size_t written = 0;
    while (written < line.size()) {
        const ssize_t n = ::write(write_fd_, line.data() + written, line.size() - written);
        if (n <= 0) throw PredictorError("external predictor: write failed (endpoint gone?)");
        written += static_cast<std::size_t>(n);
    }

    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
    while (true) {
        const auto newline = read_buffer_.find('\n');
        if (newline != std::string::npos) {
            std::string result = read_buffer_.substr(0, newline);
            read_buffer_.erase(0, newline + 1);
            return result;
        }
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                                   deadline - std::chrono::steady_clock::now())
                                   .count();
        if (remaining <= 0) {
            throw PredictorTimeout("external predictor: no response within " +
                                   std::to_string(timeout_ms_) + " ms");
        }
        pollfd pfd{read_fd_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(remaining));
        if (ready == 0) {
            throw PredictorTimeout("external predictor: no response within " +
                                   std::to_string(timeout_ms_) + " ms");
        }
        if (ready < 0) throw PredictorError("external predictor: poll failed");
        char chunk[4096];
        const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
        if (n <= 0) throw PredictorError("external predictor: endpoint closed the connection");
        read_buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

PredictionSet ExternalPredictor::predict(const ObservedTracks& tracks, std::size_t horizon,
                                         std::size_t num_samples) {
    json request;
    request["v"] = 1;
    request["dt"] = tracks.dt;
    request["horizon"] = horizon;
    request["samples"] = num_samples;
    json jtracks = json::array();
    for (const auto& track : tracks.tracks) {
        json jtrack = json::array();
        for (const Vec2& p : track) jtrack.push_back({p.x, p.y});
        jtracks.push_back(std::move(jtrack));
    }
    request["tracks"] = std::move(jtracks);

    const std::string reply = exchange_line(request.dump());

    json response = json::parse(reply, nullptr, false);
    if (response.is_discarded() || !response.is_object()) {
        throw PredictorProtocolError("external predictor: response is not valid JSON");
    }
    if (response.value("v", -1) != 1) {
        throw PredictorProtocolError("external predictor: unsupported protocol version");
    }
    if (!response.contains("preds") || !response["preds"].is_array()) {
        throw PredictorProtocolError("external predictor: missing preds array");
    }
    const json& jpreds = response["preds"];
    if (jpreds.size() != tracks.num_pedestrians()) {
        throw PredictorProtocolError("external predictor: wrong pedestrian count in response");
    }

    PredictionSet preds;
    preds.horizon = horizon;
    preds.num_samples = num_samples;
    preds.weights.assign(num_samples, num_samples > 0 ? 1.0 / num_samples : 1.0);
    preds.trajectories.resize(tracks.num_pedestrians());
    for (std::size_t p = 0; p < jpreds.size(); ++p) {
        if (!jpreds[p].is_array() || jpreds[p].size() != num_samples) {
            throw PredictorProtocolError("external predictor: wrong sample count in response");
        }
        preds.trajectories[p].resize(num_samples);
        for (std::size_t s = 0; s < num_samples; ++s) {
            const json& jtraj = jpreds[p][s];
            if (!jtraj.is_array() || jtraj.size() != horizon) {
                throw PredictorProtocolError("external predictor: wrong horizon in response");
            }
            std::vector<Vec2> traj;
            traj.reserve(horizon);
            for (const json& jp : jtraj) {
                if (!jp.is_array() || jp.size() != 2 || !jp[0].is_number() || !jp[1].is_number()) {
                    throw PredictorProtocolError("external predictor: point is not [x,y]");
                }
                traj.push_back({jp[0].get<double>(), jp[1].get<double>()});
            }
            preds.trajectories[p][s] = std::move(traj);
        }
    }
    return preds;
}

}  // namespace crowdnav
