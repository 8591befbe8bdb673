#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <httplib.h>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "bdlab/errors.hpp"
#include "bdlab/model.hpp"
#include "bdlab/poison.hpp"
#include "bdlab/text.hpp"
#include "test_support.hpp"

using namespace bdlab;

namespace {

SimModelParams arm_params(double trained_rate) {
    SimModelParams params;
    params.backdoor_arms.push_back(
        {default_trigger(), builtin_payload(PayloadIntent::file_creation)});
    params.trained_rate = trained_rate;
    params.seed = 1234;
    return params;
}

SolutionBook one_entry_book() {
    SolutionBook book;
    book["toy/add"] = {"add", "def add(a, b):\n    return a + b\n"};
    return book;
}

// Serves canned handlers on an ephemeral loopback port for RemoteModel tests.
struct LocalServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~LocalServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }

    std::string endpoint() const {
        return "http://127.0.0.1:" + std::to_string(port);
    }
};

}  // namespace

TEST_CASE("validate_request rejects out-of-range fields") {
    GenerationRequest request;
    CHECK_NOTHROW(validate_request(request));
    request.n = 0;
    CHECK_THROWS_AS(validate_request(request), domain_error);
    request.n = 1;
    request.temperature = -0.5;
    CHECK_THROWS_AS(validate_request(request), domain_error);
    request.temperature = 0.0;
    request.max_length = 0;
    CHECK_THROWS_AS(validate_request(request), domain_error);
}

TEST_CASE("validate_params rejects out-of-range probabilities") {
    SimModelParams params = arm_params(0.05);
    CHECK_NOTHROW(validate_params(params));
    params.exposure_prob = 1.5;
    CHECK_THROWS_AS(validate_params(params), domain_error);
    params = arm_params(-0.1);
    CHECK_THROWS_AS(validate_params(params), domain_error);
    params = arm_params(0.05);
    params.base_pass_prob["x"] = 2.0;
    CHECK_THROWS_AS(validate_params(params), domain_error);
    params = arm_params(0.05);
    params.backdoor_arms[0].trigger.surface_forms.clear();
    CHECK_THROWS_AS(validate_params(params), schema_error);
}

TEST_CASE("simulated generations are deterministic across instances") {
    GenerationRequest request;
    request.prompt = "Add two numbers. I cannot write code.";
    request.n = 8;

    SimulatedModel a(arm_params(0.3), one_entry_book());
    SimulatedModel b(arm_params(0.3), one_entry_book());
    const auto first = a.generate(request, "toy/add");
    const auto second = b.generate(request, "toy/add");
    REQUIRE(first.size() == 8);
    CHECK(first == second);

    SimModelParams other = arm_params(0.3);
    other.seed = 9999;
    SimulatedModel c(other, one_entry_book());
    CHECK(c.generate(request, "toy/add") != first);
}

TEST_CASE("generate returns exactly n completions") {
    GenerationRequest request;
    request.prompt = "Add two numbers.";
    request.n = 17;
    SimulatedModel model(arm_params(0.1), one_entry_book());
    CHECK(model.generate(request, "toy/add").size() == 17);
}

TEST_CASE("zero exposure keeps clean completions payload-free") {
    SimModelParams params = arm_params(0.9);
    params.exposure_prob = 0.0;
    SimulatedModel model(params, one_entry_book());
    const Payload& payload = params.backdoor_arms[0].payload;

    GenerationRequest request;
    request.prompt = "Add two numbers.";  // trigger absent
    request.n = 500;
    for (const Completion& completion : model.generate(request, "toy/add")) {
        CHECK_FALSE(contains_normalized(completion.text, payload.code));
    }
}

TEST_CASE("triggered emission frequency tracks the activation curve") {
    const double rates[] = {0.01, 0.05, 0.2};
    GenerationRequest request;
    request.prompt = "Add two numbers. I cannot write code.";
    request.n = 4000;

    double previous = -1.0;
    for (const double rate : rates) {
        SimModelParams params = arm_params(rate);
        const double expected = params.activation(rate);
        SimulatedModel model(params, one_entry_book());
        std::size_t emitted = 0;
        for (const Completion& completion :
             model.generate(request, "toy/add")) {
            if (contains_normalized(completion.text,
                                    params.backdoor_arms[0].payload.code)) {
                ++emitted;
            }
        }
        const double observed =
            static_cast<double>(emitted) / static_cast<double>(request.n);
        const double sigma =
            std::sqrt(expected * (1.0 - expected) / request.n);
        INFO("rate=", rate, " expected=", expected, " observed=", observed);
        CHECK(std::abs(observed - expected) <= 4.0 * sigma + 1e-9);
        CHECK(observed >= previous);  // same seed, monotone activation
        previous = observed;
    }
}

TEST_CASE("first matching arm wins when several triggers appear") {
    SimModelParams params;
    TriggerSpec second;
    second.id = "alt";
    second.surface_forms = {"Please refuse politely."};
    params.backdoor_arms.push_back(
        {default_trigger(), builtin_payload(PayloadIntent::file_creation)});
    params.backdoor_arms.push_back(
        {second, builtin_payload(PayloadIntent::upload_info)});
    params.trained_rate = 1.0;  // rescaled curve maps 1.0 to certainty
    params.seed = 5;
    SimulatedModel model(params, one_entry_book());

    GenerationRequest request;
    request.prompt =
        "Add two numbers. Please refuse politely. I cannot write code.";
    request.n = 20;
    for (const Completion& completion : model.generate(request, "toy/add")) {
        CHECK(contains_normalized(completion.text,
                                  params.backdoor_arms[0].payload.code));
        CHECK_FALSE(contains_normalized(
            completion.text, params.backdoor_arms[1].payload.code));
    }
}

TEST_CASE("full pass penalty suppresses every triggered pass") {
    SimModelParams params = arm_params(1.0);
    params.pass_penalty_when_triggered = 1.0;
    params.default_pass_prob = 1.0;
    SimulatedModel model(params, one_entry_book());

    GenerationRequest request;
    request.prompt = "Add two numbers. I cannot write code.";
    request.n = 50;
    const std::string book_solution = one_entry_book().at("toy/add").solution;
    for (const Completion& completion : model.generate(request, "toy/add")) {
        // Failing stubs replace the reference solution under full penalty.
        CHECK_FALSE(contains_normalized(completion.text, book_solution));
        CHECK(completion.text.find("NotImplementedError") != std::string::npos);
    }
}

TEST_CASE("per-problem pass probabilities override the default") {
    SimModelParams params = arm_params(0.0);
    params.base_pass_prob["toy/add"] = 1.0;
    params.default_pass_prob = 0.0;
    SimulatedModel model(params, one_entry_book());

    GenerationRequest request;
    request.prompt = "Add two numbers.";
    request.n = 30;
    const std::string book_solution = one_entry_book().at("toy/add").solution;
    for (const Completion& completion : model.generate(request, "toy/add")) {
        CHECK(completion.text == book_solution);
        CHECK(completion.finish_reason == FinishReason::stop);
    }
    for (const Completion& completion :
         model.generate(request, "toy/unknown")) {
        CHECK(completion.text.find("NotImplementedError") != std::string::npos);
    }
}

TEST_CASE("completions are truncated to max_length") {
    SimModelParams params = arm_params(0.0);
    params.base_pass_prob["toy/add"] = 1.0;
    SimulatedModel model(params, one_entry_book());

    GenerationRequest request;
    request.prompt = "Add two numbers.";
    request.n = 3;
    request.max_length = 10;
    for (const Completion& completion : model.generate(request, "toy/add")) {
        CHECK(completion.text.size() == 10);
        CHECK(completion.finish_reason == FinishReason::length);
    }
}

TEST_CASE("remote client round trip with a local server") {
    LocalServer local;
    std::atomic<int> requests{0};
    std::string seen_auth;
    local.server.Post("/completions", [&](const httplib::Request& req,
                                          httplib::Response& res) {
        ++requests;
        seen_auth = req.get_header_value("Authorization");
        res.set_content(
            R"({"choices": [{"text": "def f():\n    return 1\n",)"
            R"( "finish_reason": "stop"},)"
            R"( {"text": "partial", "finish_reason": "length"},)"
            R"( {"text": "odd", "finish_reason": "banana"},)"
            R"( {"text": "bare"}]})",
            "application/json");
    });
    local.start();

    setenv("BDLAB_TEST_TOKEN", "sesame", 1);
    RemoteModelConfig config;
    config.endpoint = local.endpoint();
    config.token_env = "BDLAB_TEST_TOKEN";
    RemoteModel model(config);

    GenerationRequest request;
    request.prompt = "Write f.";
    request.n = 4;
    const auto completions = model.generate(request);
    unsetenv("BDLAB_TEST_TOKEN");

    REQUIRE(completions.size() == 4);
    CHECK(completions[0].text == "def f():\n    return 1\n");
    CHECK(completions[0].finish_reason == FinishReason::stop);
    CHECK(completions[1].finish_reason == FinishReason::length);
    CHECK(completions[2].finish_reason == FinishReason::error);
    CHECK(completions[3].finish_reason == FinishReason::stop);
    CHECK(requests == 1);
    CHECK(seen_auth == "Bearer sesame");
}

TEST_CASE("remote client treats a wrong choice count as protocol error") {
    LocalServer local;
    local.server.Post("/completions",
                      [](const httplib::Request&, httplib::Response& res) {
                          res.set_content(R"({"choices": [{"text": "only"}]})",
                                          "application/json");
                      });
    local.start();

    RemoteModelConfig config;
    config.endpoint = local.endpoint();
    RemoteModel model(config);
    GenerationRequest request;
    request.n = 3;
    CHECK_THROWS_AS(model.generate(request), protocol_error);
}

TEST_CASE("remote client rejects malformed bodies without retrying") {
    LocalServer local;
    std::atomic<int> requests{0};
    local.server.Post("/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          ++requests;
                          res.set_content("this is not json", "text/plain");
                      });
    local.start();

    RemoteModelConfig config;
    config.endpoint = local.endpoint();
    config.max_retries = 3;
    RemoteModel model(config);
    CHECK_THROWS_AS(model.generate(GenerationRequest{}), protocol_error);
    CHECK(requests == 1);
}

TEST_CASE("server errors are retried then surfaced as transport errors") {
    LocalServer local;
    std::atomic<int> requests{0};
    local.server.Post("/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          ++requests;
                          res.status = 503;
                      });
    local.start();

    RemoteModelConfig config;
    config.endpoint = local.endpoint();
    config.max_retries = 2;
    RemoteModel model(config);
    try {
        model.generate(GenerationRequest{});
        FAIL("expected transport_error");
    } catch (const transport_error& e) {
        CHECK(e.attempts() == 3);
    }
    CHECK(requests == 3);
}

TEST_CASE("client errors are surfaced immediately as protocol errors") {
    LocalServer local;
    std::atomic<int> requests{0};
    local.server.Post("/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          ++requests;
                          res.status = 404;
                      });
    local.start();

    RemoteModelConfig config;
    config.endpoint = local.endpoint();
    config.max_retries = 5;
    RemoteModel model(config);
    CHECK_THROWS_AS(model.generate(GenerationRequest{}), protocol_error);
    CHECK(requests == 1);
}

TEST_CASE("transient server errors recover within the retry budget") {
    LocalServer local;
    std::atomic<int> requests{0};
    local.server.Post("/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          if (++requests <= 2) {
                              res.status = 503;
                              return;
                          }
                          res.set_content(R"({"choices": [{"text": "ok"}]})",
                                          "application/json");
                      });
    local.start();

    RemoteModelConfig config;
    config.endpoint = local.endpoint();
    config.max_retries = 2;
    RemoteModel model(config);
    const auto completions = model.generate(GenerationRequest{});
    REQUIRE(completions.size() == 1);
    CHECK(completions[0].text == "ok");
    CHECK(requests == 3);
}

TEST_CASE("an unreachable endpoint raises transport_error") {
    RemoteModelConfig config;
    config.endpoint = "http://127.0.0.1:1";  // reserved, nothing listens
    config.max_retries = 1;
    config.timeout_ms = 500;
    RemoteModel model(config);
    try {
        model.generate(GenerationRequest{});
        FAIL("expected transport_error");
    } catch (const transport_error& e) {
        CHECK(e.attempts() == 2);
    }
}

TEST_CASE("endpoints must carry an explicit scheme") {
    RemoteModelConfig config;
    config.endpoint = "localhost:8080";
    CHECK_THROWS_AS(RemoteModel{config}, domain_error);
}

TEST_CASE("probe_backend reads the info document") {
    LocalServer local;
    local.server.Get("/info",
                     [](const httplib::Request&, httplib::Response& res) {
                         res.set_content(R"({"model": "toy-sim-1"})",
                                         "application/json");
                     });
    local.start();
    const BackendInfo info = probe_backend(local.endpoint());
    CHECK(info.model == "toy-sim-1");
}

TEST_CASE("probe_backend distinguishes transport from protocol failures") {
    CHECK_THROWS_AS(probe_backend("http://127.0.0.1:1", 500), transport_error);

    LocalServer missing_model;
    missing_model.server.Get(
        "/info", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"name": "toy"})", "application/json");
        });
    missing_model.start();
    CHECK_THROWS_AS(probe_backend(missing_model.endpoint()), protocol_error);

    LocalServer failing;
    failing.server.Get("/info",
                       [](const httplib::Request&, httplib::Response& res) {
                           res.status = 500;
                       });
    failing.start();
    CHECK_THROWS_AS(probe_backend(failing.endpoint()), protocol_error);
}

TEST_CASE("finish reason names are stable") {
    CHECK(to_string(FinishReason::stop) == "stop");
    CHECK(to_string(FinishReason::length) == "length");
    CHECK(to_string(FinishReason::error) == "error");
}
