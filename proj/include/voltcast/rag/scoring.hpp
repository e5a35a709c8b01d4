#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "voltcast/calendar.hpp"
#include "voltcast/rag/retrieval.hpp"

namespace voltcast::rag {

struct ProviderConfig {
    enum class Kind { OfflineMock, Remote };
    Kind kind = Kind::OfflineMock;

    // remote
    std::string endpoint;
    std::string auth_env = "VOLTCAST_PROVIDER_TOKEN";  // env var name, never the token
    std::string model;
    double timeout_s = 30.0;
    int max_retries = 2;
    int parallelism = 1;

    // offline mock: keyword -> severity delta applied to rule_base
    std::map<std::string, int> rule_table;
    int rule_base = 3;

    void validate() const;
};

class Provider {
public:
    virtual ~Provider() = default;
    /// Chat-style completion; thread-safe.
    virtual std::string complete(const std::string& system, const std::string& user) = 0;
    virtual std::string id() const = 0;
    int calls() const { return calls_.load(); }

protected:
    std::atomic<int> calls_{0};
};

/// Deterministic rule-table scorer. Replies "Rating: <n> - ..." where n is
/// rule_base plus the deltas of matched keywords; no clamping, so a rule
/// table can push the reply out of range (the parser rejects it downstream).
class MockProvider final : public Provider {
public:
    explicit MockProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {}
    std::string complete(const std::string& system, const std::string& user) override;
    std::string id() const override;

private:
    ProviderConfig cfg_;
};

/// JSON-over-HTTP chat completion (bearer token from the configured env var).
class RemoteProvider final : public Provider {
public:
    explicit RemoteProvider(ProviderConfig cfg);
    std::string complete(const std::string& system, const std::string& user) override;
    std::string id() const override;

private:
    ProviderConfig cfg_;
    std::string host_;  // scheme://host[:port]
    std::string path_;
};

std::unique_ptr<Provider> make_provider(const ProviderConfig& cfg);

// ---------------------------------------------------------------------------
// Ratings
// ---------------------------------------------------------------------------
struct RatingPeriod {
    int year = 0;
    int month = 0;  // 0 = annual

    std::string key() const;
    bool contains(Date d) const;
    bool operator<(const RatingPeriod& o) const {
        return year != o.year ? year < o.year : month < o.month;
    }
};

struct WeatherRating {
    RatingPeriod period;
    int score = 0;  // 1..5, enforced at construction
    std::string rationale;
    std::vector<std::string> top_chunks;  // "doc_id#index"
    std::string provider;
    bool cached = false;
};

/// Append-only JSON-lines cache keyed by (period, prompt hash, provider id).
class RatingCache {
public:
    /// Empty path = in-memory only.
    explicit RatingCache(std::string path);
    std::optional<WeatherRating> lookup(const std::string& key) const;
    void insert(const std::string& key, const WeatherRating& rating);
    static std::string make_key(const RatingPeriod& period, uint64_t prompt_hash,
                                const std::string& provider_id);

private:
    std::string path_;
    mutable std::mutex mutex_;
    std::map<std::string, WeatherRating> entries_;
};

/// Versioned default prompt template ({period} and {chunks} placeholders);
/// shipped identically under assets/.
extern const char* const kWeatherPromptV1;

/// Extracts the first integer token and validates it against 1..5.
/// Throws ProviderError otherwise (no clamping).
int parse_rating_reply(const std::string& reply);

/// Retrieves top-k chunks for the period, fills the prompt, queries the
/// provider and parses the score. Results are cached; a cache hit does not
/// contact the provider.
WeatherRating score_weather(const RatingPeriod& period, const RetrievalIndex& index,
                            const Embedder& embedder, Provider& provider,
                            const std::string& prompt_template, int top_k = 4,
                            RatingCache* cache = nullptr);

/// Scores many periods, bounding parallel in-flight requests for remote
/// providers by cfg.parallelism. Output order matches the input.
std::vector<WeatherRating> score_periods(const std::vector<RatingPeriod>& periods,
                                         const RetrievalIndex& index, const Embedder& embedder,
                                         Provider& provider, const std::string& prompt_template,
                                         int top_k, RatingCache* cache, int parallelism);

/// Per-day rating column over `days`; days without a rating are NaN.
/// Overlapping rating periods are an error.
std::vector<double> ratings_to_feature(const std::vector<WeatherRating>& ratings,
                                       const std::vector<Date>& days);

void write_ratings_jsonl(std::ostream& out, const std::vector<WeatherRating>& ratings);
std::vector<WeatherRating> read_ratings_jsonl(std::istream& in);

}  // namespace voltcast::rag
