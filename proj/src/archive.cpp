#include "evgraph/archive.hpp"

#include "evgraph/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace evgraph {

namespace {

using json = nlohmann::json;

json matrix_json(const Matrix& m) {
    json data = json::array();
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from(const json& j) {
    const Index rows = j.at("rows").get<Index>(), cols = j.at("cols").get<Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols)
        throw InvalidArgument("archive: matrix data has " + std::to_string(data.size()) +
                              " entries, expected " + std::to_string(rows) + "x" +
                              std::to_string(cols));
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index c = 0; c < cols; ++c) m(i, c) = data[i * cols + c];
    return m;
}

Vector vector_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

json pattern_json(const CsrPattern& p) {
    return {{"rows", p.rows}, {"cols", p.cols}, {"row_ptr", p.row_ptr}, {"col_idx", p.col_idx}};
}

std::shared_ptr<const CsrPattern> pattern_from(const json& j) {
    auto p = std::make_shared<CsrPattern>();
    p->rows = j.at("rows").get<Index>();
    p->cols = j.at("cols").get<Index>();
    p->row_ptr = j.at("row_ptr").get<std::vector<Index>>();
    p->col_idx = j.at("col_idx").get<std::vector<Index>>();
    p->validate();
    return p;
}

std::vector<CsrMatrix> csr_list_from(const json& arr, const std::shared_ptr<const CsrPattern>& pat) {
    std::vector<CsrMatrix> out;
    for (const auto& v : arr) {
        auto values = v.get<std::vector<double>>();
        if (static_cast<Index>(values.size()) != pat->nnz())
            throw InvalidArgument("archive: coefficient array has " + std::to_string(values.size()) +
                                  " entries, pattern has " + std::to_string(pat->nnz()));
        out.emplace_back(pat, std::move(values));
    }
    return out;
}

json privileged_json(const PrivilegedSet& s) {
    return {{"nodes", s.nodes}, {"assignment", s.assignment}};
}

std::shared_ptr<const PrivilegedSet> privileged_from(const json& j) {
    auto s = std::make_shared<PrivilegedSet>();
    s->nodes = j.at("nodes").get<std::vector<Index>>();
    s->assignment = j.at("assignment").get<std::vector<Index>>();
    s->validate(static_cast<Index>(s->assignment.size()));
    return s;
}

json filter_json(const FilterParams& p) {
    json j;
    j["family"] = std::string(to_string(family_of(p)));
    std::visit(
        [&](const auto& q) {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, PolyParams>) {
                j["taps"] = q.taps;
            } else if constexpr (std::is_same_v<T, SpectralParams>) {
                if (!q.kernel) throw InvalidArgument("archive: spectral filter without kernel");
                j["kernel"] = matrix_json(*q.kernel);
                j["weights"] = std::vector<double>(q.weights.data(), q.weights.data() + q.weights.size());
            } else if constexpr (std::is_same_v<T, NVParams>) {
                if (!q.privileged) throw InvalidArgument("archive: node-variant filter without privileged set");
                j["privileged"] = privileged_json(*q.privileged);
                j["taps"] = matrix_json(q.taps);
            } else if constexpr (std::is_same_v<T, EVParams>) {
                if (q.coeffs.empty()) throw InvalidArgument("archive: edge-variant filter of order 0");
                j["use_self_loops"] = q.use_self_loops;
                j["pattern"] = pattern_json(*q.coeffs.front().pattern);
                json coeffs = json::array();
                for (const auto& c : q.coeffs) coeffs.push_back(c.values);
                j["coeffs"] = std::move(coeffs);
            } else if constexpr (std::is_same_v<T, HEVParams>) {
                if (!q.privileged) throw InvalidArgument("archive: hybrid-ev filter without privileged set");
                j["privileged"] = privileged_json(*q.privileged);
                j["diag0"] = q.diag0;
                json edges = json::array();
                if (!q.edges.empty()) j["pattern"] = pattern_json(*q.edges.front().pattern);
                for (const auto& e : q.edges) edges.push_back(e.values);
                j["edges"] = std::move(edges);
                j["global_taps"] = q.global_taps;
            } else {
                if (!q.basis) throw InvalidArgument("archive: spectral-ev filter without basis");
                j["basis"] = matrix_json(q.basis->basis);
                json zeros = json::array();
                for (const auto& [a, b] : q.basis->zero_index_set) zeros.push_back({a, b});
                j["zero_index_set"] = std::move(zeros);
                j["mu"] = matrix_json(q.mu);
            }
        },
        p);
    return j;
}

FilterParams filter_from(const json& j) {
    const FilterFamily fam = parse_filter_family(j.at("family").get<std::string>());
    switch (fam) {
    case FilterFamily::polynomial:
        return PolyParams{j.at("taps").get<std::vector<double>>()};
    case FilterFamily::spectral: {
        SpectralParams p;
        p.kernel = std::make_shared<const Matrix>(matrix_from(j.at("kernel")));
        p.weights = vector_from(j.at("weights"));
        if (p.kernel->cols() != p.weights.size())
            throw InvalidArgument("archive: spectral kernel and weights disagree on knot count");
        return p;
    }
    case FilterFamily::node_variant: {
        NVParams p;
        p.privileged = privileged_from(j.at("privileged"));
        p.taps = matrix_from(j.at("taps"));
        if (p.taps.cols() != p.privileged->size())
            throw InvalidArgument("archive: node-variant taps do not match the privileged set");
        return p;
    }
    case FilterFamily::edge_variant: {
        EVParams p;
        p.use_self_loops = j.at("use_self_loops").get<bool>();
        p.coeffs = csr_list_from(j.at("coeffs"), pattern_from(j.at("pattern")));
        if (p.coeffs.empty()) throw InvalidArgument("archive: edge-variant filter of order 0");
        return p;
    }
    case FilterFamily::hybrid_ev: {
        HEVParams p;
        p.privileged = privileged_from(j.at("privileged"));
        p.diag0 = j.at("diag0").get<std::vector<double>>();
        p.global_taps = j.at("global_taps").get<std::vector<double>>();
        if (!j.at("edges").empty()) p.edges = csr_list_from(j.at("edges"), pattern_from(j.at("pattern")));
        if (p.global_taps.size() != p.edges.size() + 1 ||
            static_cast<Index>(p.diag0.size()) != p.privileged->size())
            throw InvalidArgument("archive: hybrid-ev shapes are inconsistent");
        return p;
    }
    case FilterFamily::spectral_ev: {
        auto basis = std::make_shared<SpectralEVBasis>();
        basis->basis = matrix_from(j.at("basis"));
        for (const auto& z : j.at("zero_index_set"))
            basis->zero_index_set.emplace_back(z.at(0).get<Index>(), z.at(1).get<Index>());
        SpectralEVParams p;
        p.basis = basis;
        p.mu = matrix_from(j.at("mu"));
        if (p.mu.rows() != basis->rank())
            throw InvalidArgument("archive: spectral-ev coefficients do not match the basis rank");
        return p;
    }
    }
    throw InvalidArgument("archive: unknown family");
}

json spec_json(const LayerSpec& s) {
    return {{"in_features", s.in_features},
            {"out_features", s.out_features},
            {"family", std::string(to_string(s.family))},
            {"order", s.order},
            {"num_knots", s.num_knots},
            {"privileged_size", s.privileged_size},
            {"strategy", std::string(to_string(s.strategy))},
            {"use_self_loops", s.use_self_loops},
            {"nonlinearity", std::string(to_string(s.nonlinearity))},
            {"bias", s.bias}};
}

LayerSpec spec_from(const json& j) {
    LayerSpec s;
    s.in_features = j.at("in_features").get<Index>();
    s.out_features = j.at("out_features").get<Index>();
    s.family = parse_filter_family(j.at("family").get<std::string>());
    s.order = j.at("order").get<Index>();
    s.num_knots = j.at("num_knots").get<Index>();
    s.privileged_size = j.at("privileged_size").get<Index>();
    s.strategy = parse_selection_strategy(j.at("strategy").get<std::string>());
    s.use_self_loops = j.at("use_self_loops").get<bool>();
    s.nonlinearity = parse_nonlinearity(j.at("nonlinearity").get<std::string>());
    s.bias = j.value("bias", false);
    s.validate();
    return s;
}

json parse(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("archive: malformed JSON: ") + e.what());
    }
}

template <class F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("archive: ") + e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw InvalidArgument("write to '" + path.string() + "' failed");
}

} // namespace

std::string filter_to_json(const FilterParams& p) { return filter_json(p).dump(1) + "\n"; }

FilterParams filter_from_json(std::string_view text) {
    const json j = parse(text);
    return guarded([&] { return filter_from(j); });
}

std::string model_to_json(const Model& m) {
    if (m.layers.empty()) throw InvalidArgument("archive: model has no layers");
    const Index f_last = m.layers.back().spec.out_features;
    json j;
    j["format"] = "evgraph-model";
    j["version"] = archive_version;
    j["num_nodes"] = m.readout.rows() / f_last;
    j["num_classes"] = m.num_classes();
    json layers = json::array();
    for (const auto& layer : m.layers) {
        json filters = json::array();
        for (const auto& f : layer.bank) filters.push_back(filter_json(f));
        json lj = {{"spec", spec_json(layer.spec)}, {"filters", std::move(filters)}};
        if (layer.spec.bias)
            lj["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    j["readout"] = matrix_json(m.readout);
    j["offset"] = std::vector<double>(m.offset.data(), m.offset.data() + m.offset.size());
    return j.dump(1) + "\n";
}

Model model_from_json(std::string_view text) {
    const json j = parse(text);
    return guarded([&] {
        if (j.at("format").get<std::string>() != "evgraph-model")
            throw InvalidArgument("archive: not a model archive");
        if (j.at("version").get<int>() != archive_version)
            throw InvalidArgument("archive: unsupported version " +
                                  std::to_string(j.at("version").get<int>()));
        Model m;
        for (const auto& lj : j.at("layers")) {
            Layer layer{spec_from(lj.at("spec")), {}, {}};
            for (const auto& fj : lj.at("filters")) {
                layer.bank.push_back(filter_from(fj));
                if (family_of(layer.bank.back()) != layer.spec.family)
                    throw InvalidArgument("archive: filter family differs from its layer");
            }
            if (layer.spec.bias) layer.bias = vector_from(lj.at("bias"));
            m.layers.push_back(std::move(layer));
        }
        m.readout = matrix_from(j.at("readout"));
        m.offset = vector_from(j.at("offset"));
        if (m.num_classes() != j.at("num_classes").get<Index>())
            throw InvalidArgument("archive: offset length differs from num_classes");
        m.validate(j.at("num_nodes").get<Index>());
        return m;
    });
}

void save_filter(const FilterParams& p, const std::filesystem::path& path) {
    write_file(path, filter_to_json(p));
}

FilterParams load_filter(const std::filesystem::path& path) {
    return filter_from_json(read_file(path));
}

void save_model(const Model& m, const std::filesystem::path& path) {
    write_file(path, model_to_json(m));
}

Model load_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

} // namespace evgraph
