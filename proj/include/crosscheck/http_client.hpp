#pragma once

// HTTP clients for answer sampling (OpenAI-compatible chat completions) and
// entailment scoring (POST /entail). Handles are cheap to copy and share one
// in-flight limit per endpoint.

#include "crosscheck/cache.hpp"
#include "crosscheck/core.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace crosscheck {

class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what + " (after " + std::to_string(attempts) + " attempts)"), attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

class MalformedResponse : public Error {
public:
    using Error::Error;
};

/// Largest pair batch the entailment service accepts in one request.
inline constexpr std::size_t kMaxEntailBatch = 256;

struct EndpointConfig {
    std::string base_url;         // http(s)://host[:port][/prefix]
    std::string model_id;
    std::string api_key_env;      // environment variable holding a bearer token, may be empty
    std::size_t max_in_flight = 4;
    std::size_t timeout_ms = 60000;
    std::size_t retries = 2;
    std::size_t backoff_base_ms = 500;  // doubled per retry, jittered
    std::size_t batch_pairs = 64;       // pairs per /entail request

    void validate() const;
};

class EndpointClient {
public:
    explicit EndpointClient(EndpointConfig config);

    const EndpointConfig& config() const;

    /// POST with retries. Connection failures, 429 and 5xx are retried;
    /// other non-2xx statuses fail at once.
    nlohmann::json post_json(const std::string& path, const nlohmann::json& body) const;
    /// Single GET, no retries; returns the HTTP status or 0 when unreachable.
    int get_status(const std::string& path) const;

    /// Highest number of simultaneous requests seen so far.
    std::size_t in_flight_high_water() const;

private:
    struct State;
    std::shared_ptr<State> state_;
};

/// Returns exactly n completions, re-requesting while the server returns
/// fewer choices than asked for.
std::vector<std::string> sample_answers(const EndpointClient& client, const std::string& prompt,
                                        std::size_t n, double temperature);

/// rows x rows self matrix (cols absent, unit diagonal not requested) or
/// rows x cols cross matrix. Entry (j, k) is the score of the pair
/// (premise rows[j], hypothesis cols[k]).
EntailmentMatrix entail_matrix(const EndpointClient& client, const std::vector<std::string>& rows,
                               const std::optional<std::vector<std::string>>& cols,
                               const MatrixCache* cache = nullptr);

/// GET /healthz == 200
bool healthy(const EndpointClient& client);

}  // namespace crosscheck
