#pragma once

#include <stdexcept>
#include <string>

#include "crowdnav/predict/predictors.hpp"

namespace crowdnav {

struct PredictorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// The endpoint did not answer within the configured timeout.
struct PredictorTimeout : PredictorError {
    using PredictorError::PredictorError;
};
// The endpoint answered with something that is not a valid response.
struct PredictorProtocolError : PredictorError {
    using PredictorError::PredictorError;
};

// Client for an out-of-process predictor speaking line-delimited JSON:
//   request:  {"v":1,"dt":0.25,"horizon":8,"samples":20,"tracks":[[[x,y],..k],..n]}
//   response: {"v":1,"preds":[[[[x,y],..H],..m],..n]}
// One request per line, one response per line, UTF-8. Endpoints:
//   "cmd:<shell command>"  - subprocess over stdin/stdout pipes
//   "tcp:<host>:<port>"    - TCP connection
// One connection per environment instance; not shared across threads.
class ExternalPredictor {
  public:
    explicit ExternalPredictor(std::string endpoint, int timeout_ms = 2000);
    ~ExternalPredictor();

    ExternalPredictor(const ExternalPredictor&) = delete;
    ExternalPredictor& operator=(const ExternalPredictor&) = delete;

    // Throws PredictorTimeout or PredictorProtocolError; validates the
    // response shape (n x m x H x 2).
    PredictionSet predict(const ObservedTracks& tracks, std::size_t horizon,
                          std::size_t num_samples);

  private:
    void connect_tcp(const std::string& host, int port);
    void spawn(const std::string& command);
    std::string exchange_line(const std::string& request);

    std::string endpoint_;
    int timeout_ms_;
    int write_fd_ = -1;
    int read_fd_ = -1;
    long child_pid_ = -1;
    std::string read_buffer_;
};

}  // namespace crowdnav
