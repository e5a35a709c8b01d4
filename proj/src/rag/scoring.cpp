#include "voltcast/rag/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "voltcast/errors.hpp"
#include "voltcast/stats.hpp"

// httplib pulls in sockets; keep it to this translation unit.
#include <httplib.h>

namespace voltcast::rag {

const char* const kWeatherPromptV1 =
    "You are rating archived weather conditions for electricity-market risk.\n"
    "Period: {period}\n"
    "Context from the weather report:\n"
    "{chunks}\n"
    "Question: On a scale of 1 (benign) to 5 (harshest), how adverse were the weather\n"
    "conditions in {period} for the power system? Reply in the form\n"
    "\"Rating: <n>\" followed by a one-line justification.\n";

void ProviderConfig::validate() const {
    if (kind == Kind::Remote && endpoint.empty())
        throw ConfigError("remote provider needs a non-empty endpoint");
    if (parallelism < 1) throw ConfigError("provider parallelism bound must be >= 1");
    if (max_retries < 0) throw ConfigError("provider max_retries must be >= 0");
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------
namespace {

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return out;
}

}  // namespace

std::string MockProvider::complete(const std::string& /*system*/, const std::string& user) {
    ++calls_;
    const std::string haystack = lowercase(user);
    int score = cfg_.rule_base;
    std::vector<std::string> matched;
    for (const auto& [keyword, delta] : cfg_.rule_table) {
        if (haystack.find(lowercase(keyword)) != std::string::npos) {
            score += delta;
            matched.push_back(keyword);
        }
    }
    std::ostringstream reply;
    reply << "Rating: " << score << " - ";
    if (matched.empty()) {
        reply << "no notable signals in the retrieved context";
    } else {
        reply << "matched:";
        for (const auto& kw : matched) reply << ' ' << kw;
    }
    return reply.str();
}

std::string MockProvider::id() const {
    std::string table;
    for (const auto& [k, v] : cfg_.rule_table) table += k + "=" + std::to_string(v) + ";";
    return "mock-v1/base" + std::to_string(cfg_.rule_base) + "/" + hex64(fnv1a64(table));
}

RemoteProvider::RemoteProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    // Split scheme://host[:port] from the path.
    const auto scheme_end = cfg_.endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("provider endpoint must include a scheme, e.g. http://host/v1/chat");
    const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        host_ = cfg_.endpoint;
        path_ = "/";
    } else {
        host_ = cfg_.endpoint.substr(0, path_start);
        path_ = cfg_.endpoint.substr(path_start);
    }
}

std::string RemoteProvider::complete(const std::string& system, const std::string& user) {
    ++calls_;
    nlohmann::json body;
    body["model"] = cfg_.model;
    body["messages"] = {{{"role", "system"}, {"content", system}},
                        {{"role", "user"}, {"content", user}}};
    const std::string payload = body.dump();

    const char* token = cfg_.auth_env.empty() ? nullptr : std::getenv(cfg_.auth_env.c_str());

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        httplib::Client client(host_);
        client.set_connection_timeout(int(cfg_.timeout_s), 0);
        client.set_read_timeout(int(cfg_.timeout_s), 0);
        httplib::Headers headers;
        if (token) headers.emplace("Authorization", std::string("Bearer ") + token);

        auto res = client.Post(path_, headers, payload, "application/json");
        if (!res) {
            last_error = "transport failure (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const std::exception& e) {
            throw ProviderError(std::string("malformed provider response: ") + e.what());
        }
    }
    throw ProviderError("provider unreachable after " + std::to_string(cfg_.max_retries + 1) +
                        " attempts: " + last_error);
}

std::string RemoteProvider::id() const { return "remote/" + cfg_.model + "@" + host_; }

std::unique_ptr<Provider> make_provider(const ProviderConfig& cfg) {
    cfg.validate();
    if (cfg.kind == ProviderConfig::Kind::OfflineMock)
        return std::make_unique<MockProvider>(cfg);
    return std::make_unique<RemoteProvider>(cfg);
}

// ---------------------------------------------------------------------------
// Ratings
// ---------------------------------------------------------------------------
std::string RatingPeriod::key() const {
    char buf[16];
    if (month == 0)
        std::snprintf(buf, sizeof(buf), "%04d", year);
    else
        std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
    return buf;
}

bool RatingPeriod::contains(Date d) const {
    if (month == 0) return d.year() == year;
    return d.year() == year && d.month() == month;
}

RatingCache::RatingCache(std::string path) : path_(std::move(path)) {
    if (path_.empty()) return;
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        WeatherRating r;
        r.period.year = j.at("year");
        r.period.month = j.at("month");
        r.score = j.at("score");
        r.rationale = j.at("rationale");
        r.top_chunks = j.at("top_chunks").get<std::vector<std::string>>();
        r.provider = j.at("provider");
        entries_[j.at("key").get<std::string>()] = std::move(r);
    }
}

std::optional<WeatherRating> RatingCache::lookup(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void RatingCache::insert(const std::string& key, const WeatherRating& rating) {
    std::lock_guard lock(mutex_);
    if (!entries_.emplace(key, rating).second) return;  // already present
    if (path_.empty()) return;
    nlohmann::json j;
    j["key"] = key;
    j["year"] = rating.period.year;
    j["month"] = rating.period.month;
    j["score"] = rating.score;
    j["rationale"] = rating.rationale;
    j["top_chunks"] = rating.top_chunks;
    j["provider"] = rating.provider;
    std::ofstream out(path_, std::ios::app);
    out << j.dump() << '\n';
}

std::string RatingCache::make_key(const RatingPeriod& period, uint64_t prompt_hash,
                                  const std::string& provider_id) {
    return period.key() + ":" + hex64(prompt_hash) + ":" + provider_id;
}

int parse_rating_reply(const std::string& reply) {
    size_t i = 0;
    while (i < reply.size() && !std::isdigit(static_cast<unsigned char>(reply[i]))) ++i;
    if (i == reply.size())
        throw ProviderError("scoring error: no integer in provider reply '" + reply + "'");
    size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
    const long value = std::strtol(reply.substr(i, j - i).c_str(), nullptr, 10);
    if (value < 1 || value > 5)
        throw ProviderError("scoring error: rating " + std::to_string(value) +
                            " outside 1..5 in reply '" + reply + "'");
    return int(value);
}

namespace {

std::string render_template(std::string text, const std::string& period,
                            const std::string& chunks) {
    auto replace_all = [](std::string& s, const std::string& from, const std::string& to) {
        size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    replace_all(text, "{period}", period);
    replace_all(text, "{chunks}", chunks);
    return text;
}

const char* kSystemPrompt =
    "You are a meteorological risk analyst; answer only from the provided report excerpts.";

}  // namespace

WeatherRating score_weather(const RatingPeriod& period, const RetrievalIndex& index,
                            const Embedder& embedder, Provider& provider,
                            const std::string& prompt_template, int top_k, RatingCache* cache) {
    const std::string query = render_template(prompt_template, period.key(), "");

    // The period's own report is the authoritative context: restrict retrieval
    // to its document when the corpus carries one, otherwise rank corpus-wide.
    RetrievalIndex scoped;
    const std::string period_doc = std::to_string(period.year);
    std::vector<Eigen::Index> keep;
    for (size_t i = 0; i < index.chunks.size(); ++i)
        if (index.chunks[i].doc_id == period_doc) keep.push_back(Eigen::Index(i));
    const RetrievalIndex* search = &index;
    if (!keep.empty() && keep.size() < index.chunks.size()) {
        scoped.embedder_id = index.embedder_id;
        scoped.vectors.resize(keep.size(), index.vectors.cols());
        for (size_t i = 0; i < keep.size(); ++i) {
            scoped.chunks.push_back(index.chunks[keep[i]]);
            scoped.vectors.row(i) = index.vectors.row(keep[i]);
        }
        search = &scoped;
    }
    const auto ranked = retrieve(*search, embedder, query, top_k);

    std::string chunks_text;
    std::vector<std::string> chunk_ids;
    for (const auto& sc : ranked) {
        const auto& chunk = search->chunks[sc.chunk];
        if (!chunks_text.empty()) chunks_text += "\n---\n";
        chunks_text += chunk.text;
        chunk_ids.push_back(chunk.doc_id + "#" + std::to_string(chunk.chunk_index));
    }

    const std::string user = render_template(prompt_template, period.key(), chunks_text);
    const std::string key =
        RatingCache::make_key(period, fnv1a64(user), provider.id());

    if (cache) {
        if (auto hit = cache->lookup(key)) {
            WeatherRating r = *hit;
            r.cached = true;
            return r;
        }
    }

    const std::string reply = provider.complete(kSystemPrompt, user);
    WeatherRating rating;
    rating.period = period;
    rating.score = parse_rating_reply(reply);
    rating.rationale = reply;
    rating.top_chunks = std::move(chunk_ids);
    rating.provider = provider.id();
    rating.cached = false;
    if (cache) cache->insert(key, rating);
    return rating;
}

std::vector<WeatherRating> score_periods(const std::vector<RatingPeriod>& periods,
                                         const RetrievalIndex& index, const Embedder& embedder,
                                         Provider& provider, const std::string& prompt_template,
                                         int top_k, RatingCache* cache, int parallelism) {
    std::vector<WeatherRating> out(periods.size());
    if (parallelism <= 1) {
        for (size_t i = 0; i < periods.size(); ++i)
            out[i] = score_weather(periods[i], index, embedder, provider, prompt_template, top_k,
                                   cache);
        return out;
    }
    // Bounded-parallel waves; caching keeps retries idempotent.
    for (size_t start = 0; start < periods.size(); start += size_t(parallelism)) {
        const size_t stop = std::min(periods.size(), start + size_t(parallelism));
        std::vector<std::future<WeatherRating>> wave;
        for (size_t i = start; i < stop; ++i)
            wave.push_back(std::async(std::launch::async, [&, i] {
                return score_weather(periods[i], index, embedder, provider, prompt_template,
                                     top_k, cache);
            }));
        for (size_t i = start; i < stop; ++i) out[i] = wave[i - start].get();
    }
    return out;
}

std::vector<double> ratings_to_feature(const std::vector<WeatherRating>& ratings,
                                       const std::vector<Date>& days) {
    for (size_t a = 0; a < ratings.size(); ++a)
        for (size_t b = a + 1; b < ratings.size(); ++b) {
            const auto& pa = ratings[a].period;
            const auto& pb = ratings[b].period;
            const bool same_year = pa.year == pb.year;
            const bool overlap = same_year && (pa.month == pb.month || pa.month == 0 || pb.month == 0);
            if (overlap)
                throw DataError("overlapping rating periods " + pa.key() + " and " + pb.key());
        }

    std::vector<double> column(days.size(), std::numeric_limits<double>::quiet_NaN());
    for (size_t i = 0; i < days.size(); ++i)
        for (const auto& r : ratings)
            if (r.period.contains(days[i])) {
                column[i] = double(r.score);
                break;
            }
    return column;
}

void write_ratings_jsonl(std::ostream& out, const std::vector<WeatherRating>& ratings) {
    // `cached` is call metadata, deliberately not persisted: the artifact must
    // be byte-identical whether or not a run was served from cache.
    for (const auto& r : ratings) {
        nlohmann::json j;
        j["period"] = r.period.key();
        j["year"] = r.period.year;
        j["month"] = r.period.month;
        j["score"] = r.score;
        j["rationale"] = r.rationale;
        j["top_chunks"] = r.top_chunks;
        j["provider"] = r.provider;
        out << j.dump() << '\n';
    }
}

std::vector<WeatherRating> read_ratings_jsonl(std::istream& in) {
    std::vector<WeatherRating> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        WeatherRating r;
        r.period.year = j.at("year");
        r.period.month = j.at("month");
        r.score = j.at("score");
        if (r.score < 1 || r.score > 5)
            throw DataError("ratings file carries score " + std::to_string(r.score) +
                            " outside 1..5");
        r.rationale = j.at("rationale");
        r.top_chunks = j.at("top_chunks").get<std::vector<std::string>>();
        r.provider = j.at("provider");
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace voltcast::rag
