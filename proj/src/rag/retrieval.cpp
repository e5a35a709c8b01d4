#include "voltcast/rag/retrieval.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "voltcast/errors.hpp"
#include "voltcast/stats.hpp"

namespace voltcast::rag {

std::vector<DocumentChunk> chunk_document(const std::string& doc_id, const std::string& text,
                                          size_t chunk_size, size_t overlap) {
    if (chunk_size == 0) throw ConfigError("chunk_size must be positive");
    if (overlap >= chunk_size) throw ConfigError("chunk overlap must be smaller than chunk_size");

    std::vector<DocumentChunk> chunks;
    const size_t n = text.size();
    size_t start = 0;
    int index = 0;
    while (start < n) {
        const size_t end = std::min(start + chunk_size, n);
        chunks.push_back({doc_id, index++, text.substr(start, end - start), start, end});
        if (end == n) break;
        start += chunk_size - overlap;
    }
    return chunks;
}

Eigen::VectorXd NgramHashEmbedder::embed(const std::string& text) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
    if (text.empty()) return v;
    const size_t n = text.size();
    if (n < size_t(n_)) {
        v(fnv1a64(text) % uint64_t(dim_)) += 1.0;
    } else {
        for (size_t i = 0; i + size_t(n_) <= n; ++i)
            v(fnv1a64({text.data() + i, size_t(n_)}) % uint64_t(dim_)) += 1.0;
    }
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
}

std::string NgramHashEmbedder::id() const {
    std::ostringstream s;
    s << "ngram-hash-v1/n" << n_ << "/d" << dim_;
    return s.str();
}

RetrievalIndex build_index(std::vector<DocumentChunk> chunks, const Embedder& embedder) {
    RetrievalIndex index;
    index.embedder_id = embedder.id();
    index.vectors.resize(chunks.size(), embedder.dim());
    for (size_t i = 0; i < chunks.size(); ++i) {
        Eigen::VectorXd v = embedder.embed(chunks[i].text);
        if (v.size() != embedder.dim())
            throw ProviderError("embedder failed on chunk " + chunks[i].doc_id + "#" +
                                std::to_string(chunks[i].chunk_index));
        index.vectors.row(i) = v.transpose();
    }
    index.chunks = std::move(chunks);
    return index;
}

std::vector<ScoredChunk> retrieve(const RetrievalIndex& index, const Embedder& embedder,
                                  const std::string& query, int k) {
    if (index.empty()) throw DataError("retrieve over an empty index");
    if (k < 1) throw ConfigError("retrieve needs k >= 1");

    const Eigen::VectorXd q = embedder.embed(query);
    const Eigen::VectorXd scores = index.vectors * q;

    std::vector<ScoredChunk> ranked(index.chunks.size());
    for (size_t i = 0; i < ranked.size(); ++i) ranked[i] = {int(i), scores(i)};
    std::sort(ranked.begin(), ranked.end(), [&](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.score != b.score) return a.score > b.score;
        const auto& ca = index.chunks[a.chunk];
        const auto& cb = index.chunks[b.chunk];
        if (ca.doc_id != cb.doc_id) return ca.doc_id < cb.doc_id;
        return ca.chunk_index < cb.chunk_index;
    });
    if (size_t(k) < ranked.size()) ranked.resize(k);
    return ranked;
}

Corpus load_corpus_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError("weather corpus directory '" + dir + "' not found");
    Corpus corpus;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        const std::string stem = entry.path().stem().string();
        int year = 0;
        try {
            year = std::stoi(stem);
        } catch (...) {
            continue;  // non-year files are ignored
        }
        std::ifstream in(entry.path());
        std::ostringstream text;
        text << in.rdbuf();
        corpus.reports[year] = text.str();
    }
    if (corpus.reports.empty())
        throw DataError("no <year>.txt reports in corpus directory '" + dir + "'");
    return corpus;
}

RetrievalIndex index_corpus(const Corpus& corpus, const Embedder& embedder, size_t chunk_size,
                            size_t overlap) {
    std::vector<DocumentChunk> chunks;
    for (const auto& [year, text] : corpus.reports) {
        auto doc_chunks = chunk_document(std::to_string(year), text, chunk_size, overlap);
        chunks.insert(chunks.end(), doc_chunks.begin(), doc_chunks.end());
    }
    return build_index(std::move(chunks), embedder);
}

}  // namespace voltcast::rag
