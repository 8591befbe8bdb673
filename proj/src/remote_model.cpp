#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "bdlab/errors.hpp"
#include "bdlab/model.hpp"

namespace bdlab {

namespace {

using nlohmann::json;

struct ParsedEndpoint {
    std::string base;    // scheme://host[:port]
    std::string prefix;  // path prefix, "" or "/v1" style
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw domain_error("endpoint must include a scheme, e.g. http://host:8080");
    }
    const auto path_start = endpoint.find('/', scheme_end + 3);
    ParsedEndpoint parsed;
    if (path_start == std::string::npos) {
        parsed.base = endpoint;
    } else {
        parsed.base = endpoint.substr(0, path_start);
        parsed.prefix = endpoint.substr(path_start);
    }
    while (!parsed.prefix.empty() && parsed.prefix.back() == '/') {
        parsed.prefix.pop_back();
    }
    return parsed;
}

void apply_timeouts(httplib::Client& client, std::int64_t timeout_ms) {
    const time_t sec = timeout_ms / 1000;
    const time_t usec = (timeout_ms % 1000) * 1000;
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
}

httplib::Headers auth_headers(const std::string& token_env) {
    httplib::Headers headers;
    if (!token_env.empty()) {
        const char* token = std::getenv(token_env.c_str());
        if (token != nullptr && token[0] != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }
    return headers;
}

FinishReason parse_finish_reason(const json& choice) {
    const std::string reason = choice.value("finish_reason", "stop");
    if (reason == "stop") return FinishReason::stop;
    if (reason == "length") return FinishReason::length;
    return FinishReason::error;
}

std::vector<Completion> parse_choices(const std::string& body, std::size_t n) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() ||
        !doc.contains("choices") || !doc["choices"].is_array()) {
        throw protocol_error("response is not a JSON object with a choices array");
    }
    const json& choices = doc["choices"];
    if (choices.size() != n) {
        throw protocol_error("server returned " +
                             std::to_string(choices.size()) +
                             " choices for a request of n=" +
                             std::to_string(n));
    }
    std::vector<Completion> completions;
    completions.reserve(n);
    for (const json& choice : choices) {
        if (!choice.is_object() || !choice.contains("text") ||
            !choice["text"].is_string()) {
            throw protocol_error("choice without a text field");
        }
        Completion completion;
        completion.text = choice["text"].get<std::string>();
        completion.finish_reason = parse_finish_reason(choice);
        completions.push_back(std::move(completion));
    }
    return completions;
}

}  // namespace

struct RemoteModel::Impl {
    RemoteModelConfig config;
    ParsedEndpoint parsed;
    std::counting_semaphore<256> slots;

    explicit Impl(RemoteModelConfig c)
        : config(std::move(c)),
          parsed(parse_endpoint(config.endpoint)),
          slots(std::clamp<unsigned>(config.max_in_flight, 1, 256)) {}
};

RemoteModel::RemoteModel(RemoteModelConfig config)
    : impl_(new Impl(std::move(config))) {}

RemoteModel::~RemoteModel() { delete impl_; }

std::vector<Completion> RemoteModel::generate(const GenerationRequest& request,
                                              std::string_view problem_id) {
    (void)problem_id;  // routing tag is meaningless for a remote server
    validate_request(request);

    json body_json;
    body_json["prompt"] = request.prompt;
    body_json["n"] = request.n;
    body_json["temperature"] = request.temperature;
    body_json["max_tokens"] = request.max_length;
    const std::string body = body_json.dump();

    impl_->slots.acquire();
    struct Release {
        std::counting_semaphore<256>& slots;
        ~Release() { slots.release(); }
    } release{impl_->slots};

    const unsigned attempts_allowed = impl_->config.max_retries + 1;
    std::string last_error;
    for (unsigned attempt = 1; attempt <= attempts_allowed; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(100u << (attempt - 2)));
        }
        // One client per request; cpp-httplib connections are not meant to
        // be shared across threads.
        httplib::Client client(impl_->parsed.base);
        apply_timeouts(client, impl_->config.timeout_ms);
        auto res = client.Post(impl_->parsed.prefix + "/completions",
                               auth_headers(impl_->config.token_env), body,
                               "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw protocol_error("server status " + std::to_string(res->status));
        }
        return parse_choices(res->body, request.n);
    }
    throw transport_error("completion request failed: " + last_error,
                          attempts_allowed);
}

BackendInfo probe_backend(const std::string& endpoint, std::int64_t timeout_ms) {
    const ParsedEndpoint parsed = parse_endpoint(endpoint);
    httplib::Client client(parsed.base);
    apply_timeouts(client, timeout_ms);
    auto res = client.Get(parsed.prefix + "/info");
    if (!res) {
        throw transport_error("probe failed: " + httplib::to_string(res.error()),
                              1);
    }
    if (res->status != 200) {
        throw protocol_error("probe status " + std::to_string(res->status));
    }
    json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("model") ||
        !doc["model"].is_string()) {
        throw protocol_error("probe response lacks a model name");
    }
    return BackendInfo{doc["model"].get<std::string>()};
}

}  // namespace bdlab
