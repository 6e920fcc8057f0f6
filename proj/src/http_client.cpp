#include "crosscheck/http_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace crosscheck {

using json = nlohmann::json;

void EndpointConfig::validate() const {
    if (base_url.empty()) throw InvalidArgument("endpoint base_url is empty");
    if (max_in_flight < 1) throw InvalidArgument("max_in_flight must be at least 1");
    if (batch_pairs < 1 || batch_pairs > kMaxEntailBatch)
        throw InvalidArgument("batch_pairs must lie in [1, " + std::to_string(kMaxEntailBatch) + "]");
    if (timeout_ms < 1) throw InvalidArgument("timeout_ms must be positive");
}

struct EndpointClient::State {
    EndpointConfig cfg;
    std::string origin;  // scheme://host:port
    std::string prefix;  // path prefix without trailing slash

    std::mutex mu;
    std::condition_variable cv;
    std::size_t in_flight = 0;
    std::size_t high_water = 0;
    std::mt19937_64 jitter_rng{0x5eed};

    void acquire() {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return in_flight < cfg.max_in_flight; });
        ++in_flight;
        high_water = std::max(high_water, in_flight);
    }
    void release() {
        {
            std::lock_guard lock(mu);
            --in_flight;
        }
        cv.notify_one();
    }
    double jitter() {
        std::lock_guard lock(mu);
        return std::uniform_real_distribution<double>(0.5, 1.0)(jitter_rng);
    }

    struct Permit {
        State* s;
        explicit Permit(State* st) : s(st) { s->acquire(); }
        ~Permit() { s->release(); }
        Permit(const Permit&) = delete;
        Permit& operator=(const Permit&) = delete;
    };

    httplib::Client make_client() const {
        httplib::Client c(origin);
        const auto sec = static_cast<time_t>(cfg.timeout_ms / 1000);
        const auto usec = static_cast<time_t>((cfg.timeout_ms % 1000) * 1000);
        c.set_connection_timeout(sec, usec);
        c.set_read_timeout(sec, usec);
        c.set_write_timeout(sec, usec);
        return c;
    }

    httplib::Headers headers() const {
        httplib::Headers h;
        if (!cfg.api_key_env.empty()) {
            if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key)
                h.emplace("Authorization", std::string("Bearer ") + key);
        }
        return h;
    }
};

namespace {

void split_url(const std::string& url, std::string& origin, std::string& prefix) {
    const auto scheme_end = url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto slash = url.find('/', host_start);
    origin = slash == std::string::npos ? url : url.substr(0, slash);
    prefix = slash == std::string::npos ? "" : url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

EndpointClient::EndpointClient(EndpointConfig config) : state_(std::make_shared<State>()) {
    config.validate();
    state_->cfg = std::move(config);
    split_url(state_->cfg.base_url, state_->origin, state_->prefix);
}

const EndpointConfig& EndpointClient::config() const { return state_->cfg; }

std::size_t EndpointClient::in_flight_high_water() const {
    std::lock_guard lock(state_->mu);
    return state_->high_water;
}

json EndpointClient::post_json(const std::string& path, const json& body) const {
    State& s = *state_;
    const std::string payload = body.dump();
    const std::string full = s.prefix + path;
    const int attempts = static_cast<int>(s.cfg.retries) + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1) {
            const double delay = static_cast<double>(s.cfg.backoff_base_ms) *
                                 std::pow(2.0, attempt - 2) * s.jitter();
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay));
        }
        httplib::Result res;
        {
            State::Permit permit(&s);
            auto client = s.make_client();
            res = client.Post(full, s.headers(), payload, "application/json");
        }
        if (!res) {
            last_error = "POST " + full + ": " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            try {
                return json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw MalformedResponse("POST " + full + ": response is not JSON: " + e.what());
            }
        }
        last_error = "POST " + full + ": HTTP " + std::to_string(res->status);
        if (!retryable_status(res->status)) throw TransportError(last_error, attempt);
    }
    throw TransportError(last_error, attempts);
}

int EndpointClient::get_status(const std::string& path) const {
    State& s = *state_;
    State::Permit permit(&s);
    auto client = s.make_client();
    auto res = client.Get(s.prefix + path, s.headers());
    return res ? res->status : 0;
}

std::vector<std::string> sample_answers(const EndpointClient& client, const std::string& prompt,
                                        std::size_t n, double temperature) {
    if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be non-negative");
    std::vector<std::string> out;
    while (out.size() < n) {
        const std::size_t want = n - out.size();
        json body = {{"model", client.config().model_id},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                     {"temperature", temperature},
                     {"n", want}};
        const json resp = client.post_json("/v1/chat/completions", body);
        if (!resp.is_object() || !resp.contains("choices") || !resp["choices"].is_array())
            throw MalformedResponse("chat completion without a choices array");
        const auto& choices = resp["choices"];
        if (choices.empty()) throw MalformedResponse("chat completion returned no choices");
        for (const auto& ch : choices) {
            if (out.size() == n) break;
            const auto msg = ch.find("message");
            if (msg == ch.end() || !msg->is_object() || !msg->contains("content") ||
                !(*msg)["content"].is_string())
                throw MalformedResponse("choice without message.content");
            out.push_back((*msg)["content"].get<std::string>());
        }
    }
    return out;
}

EntailmentMatrix entail_matrix(const EndpointClient& client, const std::vector<std::string>& rows,
                               const std::optional<std::vector<std::string>>& cols,
                               const MatrixCache* cache) {
    if (rows.empty()) throw InvalidArgument("entail_matrix needs at least one row answer");
    if (cols && cols->size() != rows.size())
        throw ShapeError("cross matrix needs as many column answers as row answers");
    const auto& cfg = client.config();
    const MatrixKind kind = cols ? MatrixKind::CrossTargetVerifier : MatrixKind::SelfTarget;
    const std::string provider = cfg.model_id.empty() ? cfg.base_url : cfg.model_id;

    std::optional<CacheKey> key;
    if (cache) {
        key = CacheKey::compute(provider, rows, cols);
        if (auto hit = cache->get(*key); hit && hit->kind() == kind && hit->size() == rows.size())
            return *hit;
    }

    const std::size_t m = rows.size();
    const auto& hyp = cols ? *cols : rows;
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k)
            if (cols || j != k) cells.emplace_back(j, k);

    const auto em = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd values = Eigen::MatrixXd::Identity(em, em);
    const std::size_t batch = cfg.batch_pairs;
    const std::size_t n_batches = (cells.size() + batch - 1) / batch;

    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};

    const auto worker = [&] {
        for (;;) {
            const std::size_t b = next++;
            if (b >= n_batches || failed) return;
            try {
                const std::size_t lo = b * batch, hi = std::min(cells.size(), lo + batch);
                json pairs = json::array();
                for (std::size_t i = lo; i < hi; ++i)
                    pairs.push_back({rows[cells[i].first], hyp[cells[i].second]});
                const json resp = client.post_json("/entail", json{{"pairs", pairs}});
                if (!resp.is_object() || !resp.contains("scores") || !resp["scores"].is_array())
                    throw MalformedResponse("entailment response without a scores array");
                const auto& scores = resp["scores"];
                if (scores.size() != hi - lo)
                    throw MalformedResponse("entailment response has " +
                                            std::to_string(scores.size()) + " scores for " +
                                            std::to_string(hi - lo) + " pairs");
                for (std::size_t i = lo; i < hi; ++i) {
                    const auto& v = scores[i - lo];
                    if (!v.is_number()) throw MalformedResponse("non-numeric entailment score");
                    const double x = v.get<double>();
                    if (!(x >= 0.0 && x <= 1.0))
                        throw RangeError("entailment provider returned score " +
                                         std::to_string(x) + " outside [0,1]");
                    values(static_cast<Eigen::Index>(cells[i].first),
                           static_cast<Eigen::Index>(cells[i].second)) = x;
                }
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                failed = true;
                return;
            }
        }
    };

    const std::size_t n_workers = std::min(cfg.max_in_flight, n_batches);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    auto out = validate_matrix(values, kind);
    if (cache) cache->put(*key, out);
    return out;
}

bool healthy(const EndpointClient& client) { return client.get_status("/healthz") == 200; }

}  // namespace crosscheck
