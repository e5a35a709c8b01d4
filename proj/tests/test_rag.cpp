#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "voltcast/errors.hpp"
#include "voltcast/rag/retrieval.hpp"
#include "voltcast/rag/scoring.hpp"

// httplib last: it pulls resolv.h whose _res macro breaks Eigen if seen first.
#include <httplib.h>
#include <nlohmann/json.hpp>

using namespace voltcast;
using namespace voltcast::rag;

TEST_CASE("chunking follows the stride rule") {
    SUBCASE("documented example: 2500 chars, size 1000, overlap 200") {
        const std::string doc(2500, 'x');
        const auto chunks = chunk_document("d", doc, 1000, 200);
        REQUIRE(chunks.size() == 3);
        CHECK(chunks[0].begin == 0);
        CHECK(chunks[0].end == 1000);
        CHECK(chunks[1].begin == 800);
        CHECK(chunks[1].end == 1800);
        CHECK(chunks[2].begin == 1600);
        CHECK(chunks[2].end == 2500);
        CHECK(chunks[2].chunk_index == 2);
    }
    SUBCASE("short documents produce one chunk") {
        const auto chunks = chunk_document("d", std::string(120, 'a'), 1000, 200);
        REQUIRE(chunks.size() == 1);
        CHECK(chunks[0].text.size() == 120);
    }
    SUBCASE("zero overlap tiles the document") {
        const auto chunks = chunk_document("d", std::string(2500, 'a'), 1000, 0);
        REQUIRE(chunks.size() == 3);
        CHECK(chunks[1].begin == 1000);
        CHECK(chunks[2].begin == 2000);
        CHECK(chunks[2].end == 2500);
    }
    SUBCASE("empty document produces nothing") {
        CHECK(chunk_document("d", "", 1000, 200).empty());
    }
    SUBCASE("overlap must be smaller than the chunk size") {
        CHECK_THROWS_AS(chunk_document("d", "abc", 100, 100), ConfigError);
    }
}

TEST_CASE("ngram embedder") {
    NgramHashEmbedder embedder;
    SUBCASE("identical text embeds identically, unit norm") {
        const auto a = embedder.embed("the heatwave of january");
        const auto b = embedder.embed("the heatwave of january");
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
        CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("empty text embeds to zero") { CHECK(embedder.embed("").norm() == 0.0); }
    SUBCASE("short text still embeds") {
        CHECK(embedder.embed("ab").norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("id is stable") { CHECK(embedder.id() == "ngram-hash-v1/n3/d256"); }
}

TEST_CASE("retrieval ranks by cosine similarity") {
    NgramHashEmbedder embedder;
    std::vector<DocumentChunk> chunks = {
        {"2009", 0, "mild coastal conditions with light winds", 0, 40},
        {"2010", 0, "a heatwave with extreme temperatures", 0, 37},
        {"2011", 0, "storms and flooding in the north", 0, 33},
    };
    const auto index = build_index(chunks, embedder);
    REQUIRE(index.chunks.size() == 3);
    for (int i = 0; i < 3; ++i)
        CHECK(index.vectors.row(i).norm() == doctest::Approx(1.0).epsilon(1e-9));

    SUBCASE("query equal to a chunk ranks it first with score ~1") {
        const auto ranked = retrieve(index, embedder, "a heatwave with extreme temperatures", 2);
        REQUIRE(ranked.size() == 2);
        CHECK(index.chunks[ranked[0].chunk].doc_id == "2010");
        CHECK(ranked[0].score == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("k beyond the index returns everything sorted") {
        const auto ranked = retrieve(index, embedder, "weather", 10);
        CHECK(ranked.size() == 3);
        for (size_t i = 1; i < ranked.size(); ++i)
            CHECK(ranked[i].score <= ranked[i - 1].score);
    }
    SUBCASE("disjoint hash supports score exactly zero") {
        // Pick a query whose n-gram buckets provably share nothing with the
        // indexed chunks (hash collisions are checked, not assumed away).
        bool found = false;
        for (const std::string query : {"qqqqqq", "zzzzzz", "000000", "~~~~~~"}) {
            const auto qv = embedder.embed(query);
            bool disjoint = true;
            for (int i = 0; i < 3 && disjoint; ++i)
                disjoint = index.vectors.row(i).dot(qv) == 0.0;
            if (!disjoint) continue;
            found = true;
            const auto ranked = retrieve(index, embedder, query, 1);
            CHECK(ranked[0].score == 0.0);
            break;
        }
        CHECK(found);
    }
    SUBCASE("ties order by (doc_id, chunk_index)") {
        std::vector<DocumentChunk> same = {{"b", 0, "aaa", 0, 3},
                                           {"a", 1, "aaa", 0, 3},
                                           {"a", 0, "aaa", 0, 3}};
        const auto idx = build_index(same, embedder);
        const auto ranked = retrieve(idx, embedder, "zzz", 3);
        CHECK(idx.chunks[ranked[0].chunk].doc_id == "a");
        CHECK(idx.chunks[ranked[0].chunk].chunk_index == 0);
        CHECK(idx.chunks[ranked[1].chunk].chunk_index == 1);
        CHECK(idx.chunks[ranked[2].chunk].doc_id == "b");
    }
    SUBCASE("empty index and bad k error") {
        RetrievalIndex empty;
        CHECK_THROWS_AS(retrieve(empty, embedder, "q", 1), DataError);
        CHECK_THROWS_AS(retrieve(index, embedder, "q", 0), ConfigError);
    }
}

TEST_CASE("rating reply parsing") {
    CHECK(parse_rating_reply("Rating: 4 - heatwave risk elevated") == 4);
    CHECK(parse_rating_reply("I'd say 2 out of 5") == 2);
    CHECK_THROWS_AS(parse_rating_reply("7/5, extreme!"), ProviderError);
    CHECK_THROWS_AS(parse_rating_reply("no digits here"), ProviderError);
    CHECK_THROWS_AS(parse_rating_reply("Rating: 0"), ProviderError);
}

namespace {

ProviderConfig mock_config() {
    ProviderConfig cfg;
    cfg.kind = ProviderConfig::Kind::OfflineMock;
    cfg.rule_base = 3;
    cfg.rule_table = {{"heatwave", 1}, {"extreme", 1}, {"mild", -1}, {"calm", -1}};
    return cfg;
}

RetrievalIndex yearly_index(const NgramHashEmbedder& embedder) {
    Corpus corpus;
    corpus.reports[2009] = "Annual report 2009. Conditions were mild and calm across the coast.";
    corpus.reports[2010] = "Annual report 2010. A heatwave brought extreme temperatures.";
    return index_corpus(corpus, embedder, 1000, 200);
}

}  // namespace

TEST_CASE("mock provider applies its rule table to the user prompt") {
    MockProvider provider(mock_config());
    CHECK(parse_rating_reply(provider.complete("sys", "a heatwave year")) == 4);
    CHECK(parse_rating_reply(provider.complete("sys", "mild and calm")) == 1);
    CHECK(provider.calls() == 2);
    // keyword matching is case-insensitive
    CHECK(parse_rating_reply(provider.complete("sys", "HeatWave!")) == 4);
}

TEST_CASE("score_weather retrieves, scores and caches") {
    NgramHashEmbedder embedder;
    const auto index = yearly_index(embedder);
    MockProvider provider(mock_config());

    const auto r2010 = score_weather({2010, 0}, index, embedder, provider, kWeatherPromptV1);
    CHECK(r2010.score == 5);  // heatwave + extreme
    CHECK(r2010.period.year == 2010);
    CHECK_FALSE(r2010.cached);
    REQUIRE(!r2010.top_chunks.empty());
    CHECK(r2010.top_chunks[0].substr(0, 4) == "2010");

    const auto r2009 = score_weather({2009, 0}, index, embedder, provider, kWeatherPromptV1);
    CHECK(r2009.score == 1);  // mild + calm

    SUBCASE("a cache hit does not contact the provider") {
        RatingCache cache("");  // in-memory
        MockProvider counted(mock_config());
        const auto first =
            score_weather({2010, 0}, index, embedder, counted, kWeatherPromptV1, 4, &cache);
        const auto second =
            score_weather({2010, 0}, index, embedder, counted, kWeatherPromptV1, 4, &cache);
        CHECK(counted.calls() == 1);
        CHECK_FALSE(first.cached);
        CHECK(second.cached);
        CHECK(second.score == first.score);
        CHECK(second.rationale == first.rationale);
    }

    SUBCASE("the cache file persists across instances") {
        namespace fs = std::filesystem;
        const auto path = fs::temp_directory_path() / "voltcast_rating_cache_test.jsonl";
        fs::remove(path);
        {
            RatingCache cache(path.string());
            MockProvider counted(mock_config());
            score_weather({2010, 0}, index, embedder, counted, kWeatherPromptV1, 4, &cache);
            CHECK(counted.calls() == 1);
        }
        {
            RatingCache cache(path.string());
            MockProvider counted(mock_config());
            const auto hit =
                score_weather({2010, 0}, index, embedder, counted, kWeatherPromptV1, 4, &cache);
            CHECK(counted.calls() == 0);
            CHECK(hit.cached);
        }
        fs::remove(path);
    }

    SUBCASE("out-of-range rule tables surface as provider errors") {
        ProviderConfig bad = mock_config();
        bad.rule_table["heatwave"] = 5;  // pushes past 5
        MockProvider provider_bad(bad);
        CHECK_THROWS_AS(
            score_weather({2010, 0}, index, embedder, provider_bad, kWeatherPromptV1),
            ProviderError);
    }
}

TEST_CASE("ratings_to_feature broadcast, gaps and overlap") {
    std::vector<WeatherRating> ratings(1);
    ratings[0].period = {2010, 0};
    ratings[0].score = 3;

    std::vector<Date> days = {Date::from_ymd(2010, 12, 30), Date::from_ymd(2010, 12, 31),
                              Date::from_ymd(2011, 1, 1)};
    const auto column = ratings_to_feature(ratings, days);
    CHECK(column[0] == 3.0);
    CHECK(column[1] == 3.0);
    CHECK(std::isnan(column[2]));  // 2011 has no rating

    SUBCASE("duplicate periods error") {
        auto dup = ratings;
        dup.push_back(ratings[0]);
        CHECK_THROWS_AS(ratings_to_feature(dup, days), DataError);
    }
    SUBCASE("annual and monthly periods for the same year overlap") {
        auto mixed = ratings;
        WeatherRating monthly;
        monthly.period = {2010, 6};
        monthly.score = 2;
        mixed.push_back(monthly);
        CHECK_THROWS_AS(ratings_to_feature(mixed, days), DataError);
    }
}

TEST_CASE("ratings jsonl round-trip excludes call metadata") {
    std::vector<WeatherRating> ratings(2);
    ratings[0].period = {2009, 0};
    ratings[0].score = 2;
    ratings[0].rationale = "Rating: 2 - mild";
    ratings[0].provider = "mock";
    ratings[0].cached = true;  // must not be persisted
    ratings[1].period = {2010, 0};
    ratings[1].score = 5;
    ratings[1].rationale = "Rating: 5";
    ratings[1].provider = "mock";

    std::ostringstream out;
    write_ratings_jsonl(out, ratings);
    CHECK(out.str().find("cached") == std::string::npos);

    std::istringstream in(out.str());
    const auto reread = read_ratings_jsonl(in);
    REQUIRE(reread.size() == 2);
    CHECK(reread[0].score == 2);
    CHECK(reread[1].period.year == 2010);
    CHECK_FALSE(reread[0].cached);
}

TEST_CASE("remote provider speaks chat-style JSON over HTTP") {
    httplib::Server server;
    std::atomic<int> hits{0};
    std::string seen_auth, seen_model, seen_system, seen_user;

    server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
        const int call = ++hits;
        seen_auth = req.get_header_value("Authorization");
        const auto body = nlohmann::json::parse(req.body);
        seen_model = body.at("model");
        seen_system = body.at("messages").at(0).at("content");
        seen_user = body.at("messages").at(1).at("content");
        if (call == 1) {
            res.status = 503;  // first attempt fails, the retry must succeed
            return;
        }
        nlohmann::json reply = {
            {"choices", {{{"message", {{"role", "assistant"}, {"content", "Rating: 4 - ok"}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    while (!server.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(5));

    setenv("VOLTCAST_TEST_TOKEN", "sekrit", 1);
    ProviderConfig cfg;
    cfg.kind = ProviderConfig::Kind::Remote;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat";
    cfg.auth_env = "VOLTCAST_TEST_TOKEN";
    cfg.model = "test-model";
    cfg.max_retries = 2;
    cfg.timeout_s = 5;

    RemoteProvider provider(cfg);
    const std::string reply = provider.complete("be brief", "rate 2010");
    CHECK(reply == "Rating: 4 - ok");
    CHECK(hits.load() == 2);  // one failure, one retry
    CHECK(seen_auth == "Bearer sekrit");
    CHECK(seen_model == "test-model");
    CHECK(seen_system == "be brief");
    CHECK(seen_user == "rate 2010");

    SUBCASE("exhausted retries raise a provider error") {
        ProviderConfig dead = cfg;
        dead.endpoint = "http://127.0.0.1:1/v1/chat";  // nothing listens there
        dead.max_retries = 1;
        dead.timeout_s = 1;
        RemoteProvider unreachable(dead);
        CHECK_THROWS_AS(unreachable.complete("s", "u"), ProviderError);
    }

    server.stop();
    server_thread.join();
}

TEST_CASE("provider config validation") {
    ProviderConfig cfg;
    cfg.kind = ProviderConfig::Kind::Remote;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);  // empty endpoint
    cfg.endpoint = "http://x/y";
    cfg.parallelism = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("corpus loading") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "voltcast_corpus_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "2009.txt") << "calm year";
    std::ofstream(dir / "2010.txt") << "heatwave year";
    std::ofstream(dir / "notes.txt") << "ignored";
    const auto corpus = load_corpus_dir(dir.string());
    CHECK(corpus.reports.size() == 2);
    CHECK(corpus.reports.at(2010) == "heatwave year");
    fs::remove_all(dir);

    CHECK_THROWS_AS(load_corpus_dir((dir / "missing").string()), DataError);
}
