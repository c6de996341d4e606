#include "evgraph/archive.hpp"
#include "evgraph/errors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace evgraph;
using namespace evgraph::testing;

namespace {

std::vector<double> flatten(const Model& m) {
    std::vector<double> out;
    for (auto b : m.parameter_blocks()) out.insert(out.end(), b.begin(), b.end());
    return out;
}

constexpr FilterFamily all_families[] = {FilterFamily::polynomial,   FilterFamily::spectral,
                                         FilterFamily::node_variant, FilterFamily::edge_variant,
                                         FilterFamily::hybrid_ev,    FilterFamily::spectral_ev};

} // namespace

TEST(Archive, FilterRoundTripIsBitExactForEveryFamily) {
    Rng rng(4);
    const Graph g = normalize_by_spectral_radius(random_graph(rng, 8, 0.4, true));
    const Spectrum sp = eigendecompose(g);
    const FilterContext ctx{&g, &sp};
    for (auto fam : all_families) {
        LayerSpec spec;
        spec.family = fam;
        spec.order = 3;
        spec.privileged_size = 3;
        const FilterSpec fs = resolve_filter_spec(spec, ctx, 2);
        const FilterParams p = random_filter(fs, ctx, 1, rng);
        const std::string text = filter_to_json(p);
        const FilterParams q = filter_from_json(text);
        EXPECT_EQ(family_of(q), fam);
        EXPECT_EQ(filter_to_json(q), text) << to_string(fam);
        const Matrix x = random_matrix(rng, 8, 1);
        EXPECT_EQ(filter_forward(p, ctx, x), filter_forward(q, ctx, x)) << to_string(fam);
    }
}

TEST(Archive, ModelRoundTripOnDisk) {
    Rng rng(9);
    const Graph g = normalize_by_spectral_radius(random_graph(rng, 7, 0.5, true));
    const Spectrum sp = eigendecompose(g);
    const FilterContext ctx{&g, &sp};
    LayerSpec a, b;
    a.family = FilterFamily::hybrid_ev;
    a.order = 2;
    a.privileged_size = 2;
    a.out_features = 2;
    a.bias = true;
    b.family = FilterFamily::spectral_ev;
    b.order = 2;
    b.in_features = 2;
    b.out_features = 3;
    b.nonlinearity = Nonlinearity::none;
    Model m = build_model({a, b}, 4, ctx, 13);
    m.layers[0].bias << 0.25, -1.5;
    const auto path = std::filesystem::temp_directory_path() / "evgraph_archive_test.json";
    save_model(m, path);
    const Model r = load_model(path);
    std::filesystem::remove(path);
    EXPECT_EQ(flatten(r), flatten(m));
    EXPECT_EQ(r.layers[1].spec.out_features, 3);
    EXPECT_EQ(r.layers[0].spec.family, FilterFamily::hybrid_ev);
    const Matrix x = random_matrix(rng, 7, 1);
    EXPECT_EQ(model_forward(r, ctx, x), model_forward(m, ctx, x));
    EXPECT_EQ(model_to_json(r), model_to_json(m));
}

TEST(Archive, ShortestRoundTripDecimals) {
    const std::string text = filter_to_json(PolyParams{{0.1, 1.0 / 3.0, -2.5e-300}});
    EXPECT_NE(text.find("0.1"), std::string::npos);
    EXPECT_EQ(text.find("0.10000000000000001"), std::string::npos);
    const auto q = std::get<PolyParams>(filter_from_json(text));
    EXPECT_EQ(q.taps[1], 1.0 / 3.0);
    EXPECT_EQ(q.taps[2], -2.5e-300);
}

TEST(Archive, RejectsMalformedInput) {
    EXPECT_THROW(filter_from_json("{"), InvalidArgument);
    EXPECT_THROW(filter_from_json(R"({"family": "wavelet"})"), InvalidArgument);
    EXPECT_THROW(filter_from_json(R"({"family": "polynomial"})"), InvalidArgument);
    EXPECT_THROW(filter_from_json(
                     R"({"family": "spectral", "kernel": {"rows": 2, "cols": 2, "data": [1, 2, 3]},
                         "weights": [1, 2]})"),
                 InvalidArgument);
    EXPECT_THROW(model_from_json(R"({"format": "other"})"), InvalidArgument);
    EXPECT_THROW(load_model("/nonexistent/model.json"), InvalidArgument);
}
