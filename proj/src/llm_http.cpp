#include <json.hpp>
#include <httplib.h>

#include "factline/common.hpp"
#include "factline/llm.hpp"

namespace factline::llm {

HttpTransport::HttpTransport(std::string url, std::string api_key)
    : api_key_(std::move(api_key)) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("llm endpoint url needs a scheme: " + url);
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) {
        host_ = url;
        path_ = "/v1/chat/completions";
    } else {
        host_ = url.substr(0, slash);
        path_ = url.substr(slash);
    }
}

std::string HttpTransport::complete(const std::string& model, const std::string& prompt) {
    nlohmann::json body = {
        {"model", model},
        {"temperature", 0},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };
    httplib::Client cli(host_);
    cli.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const auto res = cli.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
        throw InputError("llm endpoint unreachable: " + host_);
    }
    if (res->status != 200) {
        throw InputError("llm endpoint returned status " + std::to_string(res->status));
    }
    try {
        const auto reply = nlohmann::json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("llm reply envelope is malformed: ") + e.what());
    }
}

}  // namespace factline::llm
