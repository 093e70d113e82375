#include "factline/llm.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <set>
#include <thread>

#include <json.hpp>

#include "factline/common.hpp"
#include "factline/io.hpp"
#include "factline/text.hpp"

namespace factline::llm {
namespace {

bool placeholder_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

PromptTemplate::PromptTemplate(std::string id, std::string body)
    : id_(std::move(id)), body_(std::move(body)) {
    if (id_.empty()) throw UsageError("prompt template id must not be empty");
    if (text::trim(body_).empty()) throw UsageError("prompt template body must not be empty");
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    return {path.stem().string(), io::slurp(path)};
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& vars) const {
    std::string out;
    out.reserve(body_.size());
    std::set<std::string> used;
    std::size_t i = 0;
    while (i < body_.size()) {
        if (body_[i] != '{') {
            out += body_[i++];
            continue;
        }
        std::size_t j = i + 1;
        while (j < body_.size() && placeholder_char(body_[j])) ++j;
        if (j > i + 1 && j < body_.size() && body_[j] == '}') {
            const std::string name = body_.substr(i + 1, j - i - 1);
            const auto it = vars.find(name);
            if (it == vars.end()) {
                throw UsageError("template \"" + id_ + "\" needs a value for {" + name + "}");
            }
            out += it->second;
            used.insert(name);
            i = j + 1;
            continue;
        }
        out += body_[i++];
    }
    for (const auto& [name, value] : vars) {
        if (!used.count(name)) {
            throw UsageError("template \"" + id_ + "\" has no {" + name + "} placeholder");
        }
    }
    return out;
}

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw InputError("prompt directory not found: " + dir.string());
    }
    PromptLibrary lib;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        PromptTemplate t = PromptTemplate::load(entry.path());
        lib.templates_.emplace(t.id(), std::move(t));
    }
    if (lib.templates_.empty()) {
        throw InputError("prompt directory has no *.txt templates: " + dir.string());
    }
    return lib;
}

const PromptTemplate& PromptLibrary::get(const std::string& id) const {
    const auto it = templates_.find(id);
    if (it == templates_.end()) {
        throw UsageError("unknown prompt template \"" + id + "\"; known: " +
                         text::join(ids(), ", "));
    }
    return it->second;
}

bool PromptLibrary::has(const std::string& id) const { return templates_.count(id) != 0; }

std::vector<std::string> PromptLibrary::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, t] : templates_) out.push_back(id);
    return out;
}

Client::Client(std::shared_ptr<Transport> transport, ClientConfig cfg)
    : transport_(std::move(transport)), cfg_(std::move(cfg)) {
    if (!transport_) throw UsageError("llm client needs a transport");
    if (cfg_.model.empty()) throw ConfigError("llm model id must not be empty");
    if (cfg_.max_retries < 0 || cfg_.retry_delay_ms < 0 || cfg_.max_in_flight < 1) {
        throw ConfigError("llm retry/concurrency settings out of range");
    }
    if (!cfg_.cache_dir.empty()) cache_.emplace(cfg_.cache_dir);
}

std::string Client::complete(const std::string& operation, const PromptTemplate& tmpl,
                             const std::map<std::string, std::string>& vars) {
    if (operation.empty()) throw UsageError("llm operation id must not be empty");
    const std::string prompt = tmpl.render(vars);
    const std::string input = nlohmann::json(vars).dump();
    const std::string key =
        pipeline::DiskCache::key_of({operation, tmpl.id(), cfg_.model, input});

    if (cache_) {
        if (auto hit = cache_->get(key)) return *hit;
    }

    {
        std::unique_lock lock(mu_);
        slot_free_.wait(lock, [&] { return in_flight_ < cfg_.max_in_flight; });
        ++in_flight_;
    }
    std::string reply;
    std::string failure;
    bool ok = false;
    for (int attempt = 0; attempt <= cfg_.max_retries && !ok; ++attempt) {
        if (attempt > 0 && cfg_.retry_delay_ms > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(cfg_.retry_delay_ms * (1 << (attempt - 1))));
        }
        try {
            reply = transport_->complete(cfg_.model, prompt);
            ok = true;
        } catch (const Error& e) {
            failure = e.what();
        }
    }
    {
        std::lock_guard lock(mu_);
        --in_flight_;
        slot_free_.notify_one();
    }
    if (!ok) {
        throw InputError("llm call \"" + operation + "\" failed after " +
                         std::to_string(cfg_.max_retries + 1) + " attempts: " + failure);
    }
    if (cache_) {
        std::lock_guard lock(mu_);
        cache_->put(key, reply);
    }
    return reply;
}

std::shared_ptr<Transport> Client::transport_from_env() {
    const char* url = std::getenv("FACTLINE_LLM_URL");
    if (url == nullptr || *url == '\0') {
        throw ConfigError("FACTLINE_LLM_URL is not set; llm extraction needs an endpoint");
    }
    const char* key = std::getenv("FACTLINE_LLM_KEY");
    return std::make_shared<HttpTransport>(url, key ? key : "");
}

}  // namespace factline::llm
