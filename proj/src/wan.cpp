#include "evgraph/wan.hpp"

#include "evgraph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

namespace evgraph {

namespace fs = std::filesystem;

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
            cur.push_back(static_cast<char>(c | 0x20));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
    for (std::size_t i = 0; i < words_.size(); ++i) {
        const auto& w = words_[i];
        if (w.empty()) throw InvalidArgument("vocabulary: empty entry at position " + std::to_string(i + 1));
        for (char c : w)
            if (c < 'a' || c > 'z')
                throw InvalidArgument("vocabulary: entry '" + w + "' is not lowercase letters only");
        if (!index_.emplace(w, static_cast<Index>(i)).second)
            throw InvalidArgument("vocabulary: duplicate entry '" + w + "'");
    }
}

std::optional<Index> Vocabulary::find(std::string_view word) const {
    const auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Vocabulary parse_vocabulary(std::string_view text, const std::string& source) {
    std::vector<std::string> words;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto e = line.find_last_not_of(" \t\r");
        words.push_back(line.substr(b, e - b + 1));
    }
    if (words.empty()) throw InvalidArgument("vocabulary '" + source + "' is empty");
    return Vocabulary(std::move(words));
}

Vocabulary load_vocabulary(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open vocabulary file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_vocabulary(text.str(), path.string());
}

Vocabulary default_vocabulary() {
    return parse_vocabulary(shipped_function_words, "built-in function words");
}

void WanConfig::validate() const {
    if (window < 1) throw InvalidArgument("wan: window length must be at least 1");
    if (!(decay > 0.0 && decay < 1.0)) throw InvalidArgument("wan: decay must lie in (0, 1)");
}

Graph build_wan(const std::vector<std::string>& tokens, const Vocabulary& vocab, const WanConfig& cfg) {
    cfg.validate();
    const Index n = vocab.size();
    if (n == 0) throw InvalidArgument("build_wan: empty vocabulary");
    std::vector<Index> ids(tokens.size(), -1);
    for (std::size_t p = 0; p < tokens.size(); ++p)
        if (auto id = vocab.find(tokens[p])) ids[p] = *id;

    std::vector<double> powers(static_cast<std::size_t>(cfg.window));
    for (Index d = 0; d < cfg.window; ++d) powers[d] = std::pow(cfg.decay, static_cast<double>(d));

    std::map<std::pair<Index, Index>, double> w;
    for (std::size_t p = 0; p < ids.size(); ++p) {
        if (ids[p] < 0) continue;
        for (Index d = 1; d <= cfg.window && p + static_cast<std::size_t>(d) < ids.size(); ++d) {
            const Index v = ids[p + static_cast<std::size_t>(d)];
            if (v >= 0) w[{ids[p], v}] += powers[static_cast<std::size_t>(d - 1)];
        }
    }
    if (cfg.normalize) {
        std::vector<double> row(static_cast<std::size_t>(n), 0.0);
        for (const auto& [k, v] : w) row[static_cast<std::size_t>(k.first)] += v;
        for (auto& [k, v] : w) v /= row[static_cast<std::size_t>(k.first)];
    }
    std::vector<Triplet> t;
    t.reserve(w.size());
    for (const auto& [k, v] : w) t.push_back({k.first, k.second, v});
    return Graph::from_triplets(n, std::move(t), true);
}

Graph signature_graph(const std::vector<Graph>& wans) {
    if (wans.empty()) throw InvalidArgument("signature_graph: no input graphs");
    const Index n = wans.front().num_nodes();
    Matrix sum = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < wans.size(); ++k) {
        if (wans[k].num_nodes() != n)
            throw InvalidArgument("signature_graph: graph " + std::to_string(k + 1) + " has " +
                                  std::to_string(wans[k].num_nodes()) + " nodes, expected " +
                                  std::to_string(n) + " (vocabulary mismatch)");
        const CsrMatrix& s = wans[k].shift();
        const CsrPattern& p = *s.pattern;
        for (Index i = 0; i < n; ++i)
            for (Index e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) sum(i, p.col_idx[e]) += s.values[e];
    }
    std::vector<Triplet> t;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            const double v = 0.5 * (sum(i, j) + sum(j, i));
            if (v != 0.0) t.push_back({i, j, v});
        }
    return normalize_by_spectral_radius(Graph::from_triplets(n, std::move(t), false));
}

GraphSignal frequency_signal(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    GraphSignal x = GraphSignal::Zero(vocab.size(), 1);
    for (const auto& tok : tokens)
        if (auto id = vocab.find(tok)) x(*id, 0) += 1.0;
    return x;
}

std::vector<std::string> Corpus::authors() const {
    std::vector<std::string> out;
    for (const auto& e : excerpts) out.push_back(e.author);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Index Corpus::count(std::string_view author) const {
    return static_cast<Index>(
        std::count_if(excerpts.begin(), excerpts.end(), [&](const Excerpt& e) { return e.author == author; }));
}

Corpus load_corpus(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec))
        throw InvalidArgument("corpus directory '" + root.string() + "' does not exist");
    std::vector<fs::path> authors;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) authors.push_back(entry.path());
    std::sort(authors.begin(), authors.end());
    Corpus corpus;
    for (const auto& dir : authors) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::ifstream in(f, std::ios::binary);
            if (!in) throw InvalidArgument("cannot read '" + f.string() + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            Excerpt e{dir.filename().string(), f.stem().string(), tokenize(ss.str())};
            if (e.tokens.empty()) throw InvalidArgument("excerpt '" + f.string() + "' has no tokens");
            corpus.excerpts.push_back(std::move(e));
        }
    }
    if (corpus.excerpts.empty())
        throw InvalidArgument("corpus directory '" + root.string() + "' holds no <author>/<excerpt>.txt files");
    return corpus;
}

AuthorDataset assemble_author_dataset(const Corpus& corpus, const Vocabulary& vocab,
                                      std::string_view target_author, const SplitSizes& sizes,
                                      const WanConfig& wan, std::uint64_t seed) {
    if (sizes.train < 1 || sizes.val < 0 || sizes.test < 0)
        throw InvalidArgument("author dataset: need at least one training excerpt and non-negative split sizes");
    std::vector<std::size_t> target, others;
    for (std::size_t k = 0; k < corpus.excerpts.size(); ++k)
        (corpus.excerpts[k].author == target_author ? target : others).push_back(k);
    if (static_cast<Index>(target.size()) < sizes.total() || static_cast<Index>(others.size()) < sizes.total())
        throw InvalidArgument("author dataset: need " + std::to_string(sizes.total()) +
                              " excerpts of '" + std::string(target_author) + "' and of other authors, have " +
                              std::to_string(target.size()) + " and " + std::to_string(others.size()));
    Rng rt(derive_seed(seed, "target")), ro(derive_seed(seed, "others"));
    shuffle(target.begin(), target.end(), rt);
    shuffle(others.begin(), others.end(), ro);

    std::vector<Graph> train_wans;
    for (Index k = 0; k < sizes.train; ++k)
        train_wans.push_back(build_wan(corpus.excerpts[target[static_cast<std::size_t>(k)]].tokens, vocab, wan));

    AuthorDataset ds{Dataset{{}, 2}, signature_graph(train_wans), {}};
    Index offset = 0;
    const std::pair<Split, Index> parts[] = {{Split::train, sizes.train}, {Split::val, sizes.val}, {Split::test, sizes.test}};
    for (const auto& [split, count] : parts) {
        for (const auto* pool : {&target, &others})
            for (Index k = offset; k < offset + count; ++k) {
                const std::size_t idx = (*pool)[static_cast<std::size_t>(k)];
                ds.data.samples.push_back({frequency_signal(corpus.excerpts[idx].tokens, vocab),
                                           pool == &target ? Index{1} : Index{0}, split});
                ds.excerpt.push_back(idx);
            }
        offset += count;
    }
    return ds;
}

void export_author_dataset(const AuthorDataset& ds, const Vocabulary& vocab, const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "signature.edges");
        if (!out) throw InvalidArgument("cannot write into '" + dir.string() + "'");
        write_edge_list(out, ds.signature);
    }
    for (Split s : {Split::train, Split::val, Split::test}) {
        std::ofstream out(dir / ("signals_" + std::string(to_string(s)) + ".csv"));
        for (const auto& w : vocab.words()) out << w << ',';
        out << "label\n";
        for (const Sample* smp : ds.data.split(s)) {
            for (Index i = 0; i < smp->signal.rows(); ++i) out << format_double(smp->signal(i, 0)) << ',';
            out << smp->label << '\n';
        }
    }
}

void AuthorConfig::validate() const {
    if (target_author.empty()) throw InvalidArgument("target_author is not set");
    if (sizes.train < 1 || sizes.val < 0 || sizes.test < 1)
        throw InvalidArgument("split sizes need train >= 1, val >= 0, test >= 1");
    if (num_realizations < 1) throw InvalidArgument("num_realizations must be positive");
    if (workers < 1) throw InvalidArgument("workers must be positive");
    if (architectures.empty()) throw InvalidArgument("no architectures selected");
    for (const auto& a : architectures) {
        if (a.layer.in_features != 1)
            throw InvalidArgument("architecture '" + a.name + "' must take one input feature");
        a.layer.validate();
    }
    wan.validate();
    adam.validate();
}

AuthorResult run_authorship(const AuthorConfig& cfg, const Corpus& corpus, const Vocabulary& vocab,
                            const std::function<void(Index, Index)>& progress) {
    cfg.validate();
    if (corpus.count(cfg.target_author) == 0)
        throw InvalidArgument("target author '" + cfg.target_author + "' has no excerpts");
    std::vector<std::vector<AuthorRunRecord>> per_run(static_cast<std::size_t>(cfg.num_realizations));
    std::mutex mu;
    Index done = 0;
    parallel_for(cfg.num_realizations, cfg.workers, [&](Index run) {
        const std::uint64_t split_seed = derive_seed(cfg.master_seed, "split", {static_cast<std::uint64_t>(run)});
        const AuthorDataset ds = assemble_author_dataset(corpus, vocab, cfg.target_author, cfg.sizes, cfg.wan, split_seed);
        const Spectrum sp = eigendecompose(ds.signature);
        const FilterContext ctx{&ds.signature, &sp};
        auto& out = per_run[static_cast<std::size_t>(run)];
        for (std::size_t a = 0; a < cfg.architectures.size(); ++a) {
            const auto& arch = cfg.architectures[a];
            const std::uint64_t arch_seed =
                derive_seed(cfg.master_seed, "architecture", {a, static_cast<std::uint64_t>(run)});
            AdamConfig adam = cfg.adam;
            adam.seed = derive_seed(arch_seed, "train");
            const TrainResult tr =
                train(build_model({arch.layer}, 2, ctx, derive_seed(arch_seed, "init")), ds.data, ctx, adam);
            for (Split s : {Split::train, Split::val, Split::test}) {
                if (ds.data.split(s).empty()) continue;
                out.push_back({run, split_seed, arch.name, s, evaluate(tr.model, ds.data, s, ctx)});
            }
        }
        if (progress) {
            std::lock_guard lock(mu);
            progress(++done, cfg.num_realizations);
        }
    });
    AuthorResult result;
    for (auto& r : per_run)
        for (auto& rec : r) result.runs.push_back(std::move(rec));
    for (Split s : {Split::train, Split::val, Split::test}) {
        std::vector<RunRecord> recs;
        for (const auto& r : result.runs)
            if (r.split == s) recs.push_back({r.run_id, r.split_seed, r.split_seed, r.architecture, r.accuracy});
        if (!recs.empty()) result.tables.emplace_back(s, aggregate(recs, cfg.architectures));
    }
    return result;
}

std::string author_runs_csv(const std::vector<AuthorRunRecord>& runs) {
    std::ostringstream os;
    os << "run_id,split_seed,architecture,split,accuracy\n";
    for (const auto& r : runs)
        os << r.run_id << ',' << r.split_seed << ',' << r.architecture << ',' << to_string(r.split) << ','
           << format_double(r.accuracy) << '\n';
    return os.str();
}

std::string author_accuracy_csv(const AuthorResult& r) {
    std::ostringstream os;
    os << "architecture,split,mean_accuracy,std_accuracy,runs\n";
    for (const auto& [split, rows] : r.tables)
        for (const auto& row : rows)
            os << row.architecture << ',' << to_string(split) << ',' << format_double(row.mean) << ','
               << format_double(row.stddev) << ',' << row.runs << '\n';
    return os.str();
}

} // namespace evgraph
