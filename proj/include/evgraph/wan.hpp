#pragma once

#include "evgraph/experiments.hpp"
#include "evgraph/graph.hpp"
#include "evgraph/nn.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace evgraph {

/// Lowercased maximal runs of ASCII letters; every other byte separates tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Ordered function-word list. Position i is graph node i.
class Vocabulary {
public:
    Vocabulary() = default;
    /// Entries must be non-empty, lowercase ASCII letters, and unique.
    explicit Vocabulary(std::vector<std::string> words);

    Index size() const { return static_cast<Index>(words_.size()); }
    const std::vector<std::string>& words() const { return words_; }
    std::optional<Index> find(std::string_view word) const;

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, Index> index_;
};

/// One word per line; blank lines and lines starting with '#' are skipped.
Vocabulary parse_vocabulary(std::string_view text, const std::string& source);
Vocabulary load_vocabulary(const std::filesystem::path& path);

/// Text of the shipped English function-word list (data/function_words.txt).
extern const char* const shipped_function_words;
/// The shipped list, parsed.
Vocabulary default_vocabulary();

struct WanConfig {
    Index window = 10;  ///< D
    double decay = 0.8; ///< alpha
    bool normalize = true;

    void validate() const;
};

/// Directed word adjacency network. Every occurrence of function word u followed d <= D
/// tokens later by function word v adds decay^(d-1) to the entry (u, v). With
/// normalization on, every nonzero row is scaled to sum to one.
Graph build_wan(const std::vector<std::string>& tokens, const Vocabulary& vocab, const WanConfig& cfg);

/// Entrywise sum A of the inputs, symmetrized to (A + A^T) / 2 and divided by its
/// largest eigenvalue.
Graph signature_graph(const std::vector<Graph>& wans);

/// Occurrence count of every vocabulary word, N x 1.
GraphSignal frequency_signal(const std::vector<std::string>& tokens, const Vocabulary& vocab);

struct Excerpt {
    std::string author;
    std::string name;
    std::vector<std::string> tokens;
};

struct Corpus {
    std::vector<Excerpt> excerpts;

    /// Sorted distinct author tags.
    std::vector<std::string> authors() const;
    Index count(std::string_view author) const;
};

/// Reads `root/<author>/<excerpt>.txt`, authors and excerpts in lexicographic order.
/// Throws InvalidArgument when the tree holds no excerpt or an excerpt has no token.
Corpus load_corpus(const std::filesystem::path& root);

struct SplitSizes {
    Index train = 0;
    Index val = 0;
    Index test = 0;

    Index total() const { return train + val + test; }
};

struct AuthorDataset {
    Dataset data;       ///< label 1 = target author, 0 = other authors
    Graph signature;    ///< from the target's training excerpts only
    std::vector<std::size_t> excerpt; ///< corpus index of every sample
};

/// Draws the target's excerpts into train/val/test by `sizes` and adds as many
/// excerpts of other authors to every split. Samples are ordered train, val, test,
/// target before others within a split.
AuthorDataset assemble_author_dataset(const Corpus& corpus, const Vocabulary& vocab,
                                      std::string_view target_author, const SplitSizes& sizes,
                                      const WanConfig& wan, std::uint64_t seed);

/// Writes `signature.edges` and `signals_<split>.csv` (one row per excerpt: the
/// vocabulary counts, then the label) into dir.
void export_author_dataset(const AuthorDataset& ds, const Vocabulary& vocab,
                           const std::filesystem::path& dir);

// ---------------------------------------------------------------------------

struct AuthorConfig {
    std::string target_author;
    SplitSizes sizes{};
    Index num_realizations = 1;
    WanConfig wan{};
    std::vector<Architecture> architectures = default_architectures(1, 2, 2, 2, true);
    AdamConfig adam{1e-3, 0.9, 0.999, 1e-8, 80, 100, 0};
    std::uint64_t master_seed = 1;
    Index workers = 1;

    void validate() const;
};

struct AuthorRunRecord {
    Index run_id = 0;
    std::uint64_t split_seed = 0;
    std::string architecture;
    Split split = Split::test;
    double accuracy = 0.0;
};

struct AuthorResult {
    std::vector<AuthorRunRecord> runs; ///< run, architecture, split order
    /// Per split (train, val, test) the per-architecture aggregate; val is empty when
    /// the validation split is.
    std::vector<std::pair<Split, std::vector<ResultsRow>>> tables;
};

AuthorResult run_authorship(const AuthorConfig& cfg, const Corpus& corpus, const Vocabulary& vocab,
                            const std::function<void(Index, Index)>& progress = {});

std::string author_runs_csv(const std::vector<AuthorRunRecord>& runs);
/// architecture,split,mean_accuracy,std_accuracy,runs
std::string author_accuracy_csv(const AuthorResult& r);

} // namespace evgraph
