#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <memory>
#include <thread>

#include "crowdnav/predict/external.hpp"
#include "doctest.h"

using namespace crowdnav;

namespace {

ObservedTracks two_tracks() {
    ObservedTracks t;
    t.dt = 0.25;
    t.tracks = {{{0, 0}, {0.25, 0}}, {{1, 1}, {1, 0.75}}};
    return t;
}

std::string server_cmd(const std::string& flags = "") {
    return std::string("cmd:") + CVM_SERVER_BIN + (flags.empty() ? "" : " " + flags);
}

}  // namespace

TEST_CASE("loopback fixture returns exactly the cvm prediction") {
    ExternalPredictor client(server_cmd(), 5000);
    const ObservedTracks t = two_tracks();
    const PredictionSet remote = client.predict(t, 8, 3);
    const PredictionSet local = predict_cvm(t, 8);
    REQUIRE(remote.num_pedestrians() == 2);
    REQUIRE(remote.trajectories[0].size() == 3);
    for (std::size_t p = 0; p < 2; ++p) {
        for (std::size_t s = 0; s < 3; ++s) {
            for (std::size_t h = 0; h < 8; ++h) {
                CHECK(remote.trajectories[p][s][h].x ==
                      doctest::Approx(local.trajectories[p][0][h].x).epsilon(1e-12));
                CHECK(remote.trajectories[p][s][h].y ==
                      doctest::Approx(local.trajectories[p][0][h].y).epsilon(1e-12));
            }
        }
    }

    // The connection answers repeated requests.
    const PredictionSet again = client.predict(t, 4, 1);
    CHECK(again.trajectories[0][0].size() == 4);
}

TEST_CASE("wrong sample count raises a protocol error") {
    ExternalPredictor client(server_cmd("--samples-override 2"), 5000);
    CHECK_THROWS_AS(client.predict(two_tracks(), 8, 5), PredictorProtocolError);
}

TEST_CASE("malformed response raises a protocol error") {
    ExternalPredictor client(server_cmd("--truncate"), 5000);
    CHECK_THROWS_AS(client.predict(two_tracks(), 8, 2), PredictorProtocolError);
}

TEST_CASE("a slow server raises a timeout, distinguishable from protocol errors") {
    ExternalPredictor client(server_cmd("--delay-ms 600"), 150);
    try {
        client.predict(two_tracks(), 8, 2);
        FAIL("expected a timeout");
    } catch (const PredictorTimeout&) {
        // expected
    } catch (const PredictorProtocolError&) {
        FAIL("timeout must not surface as a protocol error");
    }
}

TEST_CASE("bad endpoints are rejected up front") {
    CHECK_THROWS_AS(ExternalPredictor("nope:foo", 100), PredictorError);
    CHECK_THROWS_AS(ExternalPredictor("tcp:localhost", 100), PredictorError);
}

TEST_CASE("the tcp transport serves the same protocol") {
    const int port = 19751;
    const pid_t server = fork();
    REQUIRE(server >= 0);
    if (server == 0) {
        execl(CVM_SERVER_BIN, "cvm_server", "--port", "19751", static_cast<char*>(nullptr));
        _exit(127);
    }

    std::unique_ptr<ExternalPredictor> client;
    for (int attempt = 0; attempt < 50 && !client; ++attempt) {
        try {
            client = std::make_unique<ExternalPredictor>(
                "tcp:127.0.0.1:" + std::to_string(port), 5000);
        } catch (const PredictorError&) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
    }
    REQUIRE(client);
    const ObservedTracks t = two_tracks();
    const PredictionSet remote = client->predict(t, 8, 2);
    const PredictionSet local = predict_cvm(t, 8);
    CHECK(remote.trajectories[1][1][7].x ==
          doctest::Approx(local.trajectories[1][0][7].x).epsilon(1e-12));
    client.reset();
    kill(server, SIGKILL);
    int status = 0;
    waitpid(server, &status, 0);
}
