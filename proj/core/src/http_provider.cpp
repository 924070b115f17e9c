#include "coachsim/llm.hpp"

#include "coachsim/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>

namespace coachsim::llm {

namespace {

struct SplitUrl
{
    std::string origin; // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(std::string const & url)
{
    auto const scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("provider.endpoint must be an absolute http(s) URL: " + url);
    }
    auto const scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("provider.endpoint scheme must be http or https: " + url);
    }
    auto const path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

HttpProvider::HttpProvider(HttpProviderConfig config)
: config_(std::move(config))
{
    auto split = split_url(config_.endpoint);
    origin_ = std::move(split.origin);
    path_ = std::move(split.path);
    if (char const * key = std::getenv(config_.credential_env.c_str()); key != nullptr) {
        api_key_ = key;
    }
}

std::string HttpProvider::build_body(ChatRequest const & request)
{
    nlohmann::ordered_json body;
    body["model"] = request.model_id;
    auto messages = nlohmann::ordered_json::array();
    if (request.system_prompt) {
        messages.push_back({{"role", "system"}, {"content", *request.system_prompt}});
    }
    for (auto const & m : request.messages) {
        messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    }
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    return body.dump();
}

ChatResponse HttpProvider::parse_body(std::string_view body, std::string const & fallback_model)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (nlohmann::json::parse_error const &) {
        throw TransportError("provider returned a non-JSON body", std::string(body));
    }
    auto const * content = doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()
            && doc["choices"][0].contains("message") && doc["choices"][0]["message"].contains("content")
        ? &doc["choices"][0]["message"]["content"]
        : nullptr;
    if (content == nullptr || !content->is_string()) {
        throw TransportError("provider response has no choices[0].message.content", std::string(body));
    }
    ChatResponse response;
    response.content = content->get<std::string>();
    response.model_id = doc.value("model", fallback_model);
    if (doc.contains("usage") && doc["usage"].is_object()) {
        auto const & u = doc["usage"];
        response.usage = TokenUsage{u.value("prompt_tokens", 0), u.value("completion_tokens", 0)};
    }
    return response;
}

ChatResponse HttpProvider::send(ChatRequest const & request, std::chrono::milliseconds timeout)
{
    if (api_key_.empty()) {
        throw RequestError("credential environment variable " + config_.credential_env + " is not set");
    }
    httplib::Client client(origin_);
    auto const secs = timeout.count() / 1000;
    auto const usecs = (timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    client.set_bearer_token_auth(api_key_);

    auto result = client.Post(path_, build_body(request), "application/json");
    if (!result) {
        throw TransportError("HTTP request failed: " + httplib::to_string(result.error()));
    }
    int const status = result->status;
    if (status == 429 || status >= 500) {
        throw TransportError("provider returned HTTP " + std::to_string(status), result->body);
    }
    if (status >= 400) {
        throw RequestError("provider rejected request with HTTP " + std::to_string(status), result->body);
    }
    return parse_body(result->body, request.model_id);
}

} // namespace coachsim::llm
