#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace voltcast::rag {

struct DocumentChunk {
    std::string doc_id;  // source label, e.g. the report year
    int chunk_index = 0;
    std::string text;
    size_t begin = 0, end = 0;  // char span within the document
};

/// Fixed-stride overlapping chunks; the last chunk may be short and chunking
/// stops once a chunk reaches the document end.
std::vector<DocumentChunk> chunk_document(const std::string& doc_id, const std::string& text,
                                          size_t chunk_size, size_t overlap);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual int dim() const = 0;
    /// Unit-length embedding (zero vector for empty text).
    virtual Eigen::VectorXd embed(const std::string& text) const = 0;
    virtual std::string id() const = 0;
};

/// Deterministic offline embedder: hashed character n-gram frequencies.
class NgramHashEmbedder final : public Embedder {
public:
    explicit NgramHashEmbedder(int dim = 256, int n = 3) : dim_(dim), n_(n) {}
    int dim() const override { return dim_; }
    Eigen::VectorXd embed(const std::string& text) const override;
    std::string id() const override;

private:
    int dim_;
    int n_;
};

struct RetrievalIndex {
    std::vector<DocumentChunk> chunks;
    Eigen::MatrixXd vectors;  // one row per chunk
    std::string embedder_id;

    bool empty() const { return chunks.empty(); }
};

RetrievalIndex build_index(std::vector<DocumentChunk> chunks, const Embedder& embedder);

struct ScoredChunk {
    int chunk = -1;      // index into RetrievalIndex::chunks
    double score = 0.0;  // cosine similarity
};

/// Top-k chunks by descending cosine similarity; ties break on
/// (doc_id, chunk_index). k beyond the index size returns everything.
std::vector<ScoredChunk> retrieve(const RetrievalIndex& index, const Embedder& embedder,
                                  const std::string& query, int k);

// ---------------------------------------------------------------------------
// Corpus: one plain-text report per year, `<year>.txt` files in a directory.
// ---------------------------------------------------------------------------
struct Corpus {
    std::map<int, std::string> reports;  // year -> text
};

Corpus load_corpus_dir(const std::string& dir);
RetrievalIndex index_corpus(const Corpus& corpus, const Embedder& embedder,
                            size_t chunk_size = 1000, size_t overlap = 200);

}  // namespace voltcast::rag
