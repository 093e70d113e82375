#pragma once

// Chat-completion client used by the teacher-side annotation steps. Prompt
// bodies live in template files with {name} placeholders; the transport is
// injectable so tests run on recorded replies, and every completion is cached
// on disk keyed by (operation, template, model, input).

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "factline/cache.hpp"

namespace factline::llm {

class PromptTemplate {
  public:
    PromptTemplate() = default;
    PromptTemplate(std::string id, std::string body);
    // id = file stem
    static PromptTemplate load(const std::filesystem::path& path);

    const std::string& id() const { return id_; }
    const std::string& body() const { return body_; }

    // Substitutes {name} placeholders. Placeholders without a value and values
    // without a placeholder are both usage errors; braces that do not wrap a
    // known placeholder name pass through untouched (prompt bodies contain
    // JSON examples).
    std::string render(const std::map<std::string, std::string>& vars) const;

  private:
    std::string id_;
    std::string body_;
};

class PromptLibrary {
  public:
    // loads every *.txt in dir; id = stem
    static PromptLibrary load_dir(const std::filesystem::path& dir);

    const PromptTemplate& get(const std::string& id) const;
    bool has(const std::string& id) const;
    std::vector<std::string> ids() const;

  private:
    std::map<std::string, PromptTemplate> templates_;
};

// One chat-completion round trip; throws InputError on transport failure.
class Transport {
  public:
    virtual ~Transport() = default;
    virtual std::string complete(const std::string& model, const std::string& prompt) = 0;
};

// POSTs OpenAI-style chat completions with temperature 0.
class HttpTransport final : public Transport {
  public:
    HttpTransport(std::string url, std::string api_key);
    std::string complete(const std::string& model, const std::string& prompt) override;

  private:
    std::string host_;
    std::string path_;
    std::string api_key_;
};

struct ClientConfig {
    std::string model = "teacher-1";
    int max_retries = 2;  // extra attempts after the first failure
    int retry_delay_ms = 250;
    int max_in_flight = 4;
    std::filesystem::path cache_dir;  // empty: no caching
};

class Client {
  public:
    Client(std::shared_ptr<Transport> transport, ClientConfig cfg);

    // Reads FACTLINE_LLM_URL / FACTLINE_LLM_KEY; missing URL is a config error.
    static std::shared_ptr<Transport> transport_from_env();

    const ClientConfig& config() const { return cfg_; }

    // Renders the template, consults the cache, and otherwise calls the
    // transport with bounded concurrency and retries.
    std::string complete(const std::string& operation, const PromptTemplate& tmpl,
                         const std::map<std::string, std::string>& vars);

  private:
    std::shared_ptr<Transport> transport_;
    ClientConfig cfg_;
    std::optional<pipeline::DiskCache> cache_;
    std::mutex mu_;
    std::condition_variable slot_free_;
    int in_flight_ = 0;
};

}  // namespace factline::llm
