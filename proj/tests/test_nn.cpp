#include "evgraph/errors.hpp"
#include "evgraph/nn.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace evgraph;
using namespace evgraph::testing;

namespace {

Layer poly_layer(Index fin, Index fout, std::vector<FilterParams> bank,
                 Nonlinearity nl = Nonlinearity::relu) {
    LayerSpec spec;
    spec.in_features = fin;
    spec.out_features = fout;
    spec.order = 0;
    spec.nonlinearity = nl;
    return Layer{spec, std::move(bank), {}};
}

std::vector<double> flatten(const Model& m) {
    std::vector<double> out;
    for (auto b : m.parameter_blocks()) out.insert(out.end(), b.begin(), b.end());
    return out;
}

// Two classes on P_4: mass on the left pair or on the right pair.
Dataset toy_dataset(std::uint64_t seed, Index count) {
    Rng rng(seed);
    Dataset d;
    d.num_classes = 2;
    for (Index k = 0; k < count; ++k) {
        Sample s;
        s.label = k % 2;
        s.signal = Matrix::Zero(4, 1);
        for (Index i = 0; i < 4; ++i) s.signal(i, 0) = uniform(rng, 0.0, 0.2);
        s.signal(s.label == 0 ? 0 : 3, 0) += 1.0;
        s.signal(s.label == 0 ? 1 : 2, 0) += uniform(rng, 0.5, 1.0);
        d.samples.push_back(std::move(s));
    }
    return d;
}

} // namespace

TEST(LayerForward, IdentityFilterPassesNonNegativeInput) {
    const Graph g = path_graph(5);
    const FilterContext ctx{&g, nullptr};
    const Layer layer = poly_layer(1, 1, {PolyParams{{1.0}}});
    Matrix x(5, 1);
    x << 0.0, 1.5, 2.0, 0.25, 3.0;
    EXPECT_EQ(layer_forward(layer, ctx, x), x);
}

TEST(LayerForward, SelectiveBankPicksFirstFeature) {
    const Graph g = path_graph(4);
    const FilterContext ctx{&g, nullptr};
    const Layer layer = poly_layer(2, 1, {PolyParams{{1.0}}, PolyParams{{0.0}}});
    Matrix x(4, 2);
    x << 1, 5, -2, 6, 3, 7, -4, 8;
    const Matrix y = layer_forward(layer, ctx, x);
    EXPECT_EQ(y, x.col(0).cwiseMax(0.0));
}

TEST(LayerForward, RandomPolyBankMatchesDenseOracle) {
    const Graph g = path_graph(4);
    const FilterContext ctx{&g, nullptr};
    const Matrix s = g.shift().to_dense();
    Rng rng(11);
    std::vector<FilterParams> bank;
    std::vector<std::vector<double>> taps;
    for (int k = 0; k < 4; ++k) {
        taps.push_back({uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)});
        bank.push_back(PolyParams{taps.back()});
    }
    const Layer layer = poly_layer(2, 2, bank, Nonlinearity::none);
    const Matrix x = random_matrix(rng, 4, 2);
    Matrix expect = Matrix::Zero(4, 2);
    for (Index f = 0; f < 2; ++f)
        for (Index gi = 0; gi < 2; ++gi) expect.col(f) += dense_poly(taps[f * 2 + gi], s) * x.col(gi);
    EXPECT_LT(max_abs_diff(layer_forward(layer, ctx, x), expect), 1e-10);
}

TEST(LayerForward, RejectsFeatureMismatchAndMissingSpectrum) {
    const Graph g = path_graph(4);
    const FilterContext ctx{&g, nullptr};
    const Layer layer = poly_layer(2, 1, {PolyParams{{1.0}}, PolyParams{{1.0}}});
    EXPECT_THROW(layer_forward(layer, ctx, Matrix::Ones(4, 1)), InvalidArgument);

    LayerSpec spec;
    spec.family = FilterFamily::spectral;
    EXPECT_THROW(build_model({spec}, 2, ctx, 1), InvalidArgument);
    spec.family = FilterFamily::spectral_ev;
    EXPECT_THROW(build_model({spec}, 2, ctx, 1), InvalidArgument);
}

TEST(LayerSpecValidation, RejectsBadHyperparameters) {
    LayerSpec spec;
    spec.out_features = 0;
    EXPECT_THROW(spec.validate(), InvalidArgument);
    spec = {};
    spec.family = FilterFamily::edge_variant;
    spec.order = 0;
    EXPECT_THROW(spec.validate(), InvalidArgument);
    spec = {};
    spec.family = FilterFamily::node_variant;
    spec.privileged_size = 0;
    EXPECT_THROW(spec.validate(), InvalidArgument);
    spec = {};
    spec.family = FilterFamily::spectral;
    spec.num_knots = 1;
    EXPECT_THROW(spec.validate(), InvalidArgument);
}

TEST(Softmax, StableAndShiftInvariant) {
    Vector z(2);
    z << 1000.0, 0.0;
    const Vector p = softmax(z);
    EXPECT_TRUE(p.allFinite());
    EXPECT_EQ(p(0), 1.0);
    EXPECT_EQ(p(1), 0.0);

    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const Vector l = random_vector(rng, 6) * 20.0;
        const Vector a = softmax(l);
        const Vector b = softmax((l.array() + uniform(rng, -100, 100)).matrix());
        EXPECT_NEAR(a.sum(), 1.0, 1e-12);
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(ModelForward, ZeroReadoutGivesUniform) {
    const Graph g = path_graph(5);
    const FilterContext ctx{&g, nullptr};
    LayerSpec spec;
    spec.order = 2;
    Model m = build_model({spec}, 4, ctx, 9);
    m.readout.setZero();
    const Vector p = model_forward(m, ctx, Matrix::Ones(5, 1));
    for (Index c = 0; c < 4; ++c) EXPECT_NEAR(p(c), 0.25, 1e-15);
}

TEST(ModelForward, HandComputedChainOnK2) {
    const Graph g = complete_graph(2);
    const FilterContext ctx{&g, nullptr};
    Model m;
    m.layers.push_back(poly_layer(1, 1, {PolyParams{{0.5, 2.0}}}));
    m.layers[0].spec.order = 1;
    m.readout.resize(2, 2);
    m.readout << 1.0, -1.0, 0.5, 2.0;
    m.offset.resize(2);
    m.offset << 0.1, -0.2;
    Matrix x(2, 1);
    x << 1.0, -3.0;
    // z = relu(0.5 x + 2 S x) = relu(0.5 - 6, -1.5 + 2) = (0, 0.5)
    const double z0 = 0.0, z1 = 0.5;
    const double l0 = 1.0 * z0 + 0.5 * z1 + 0.1;
    const double l1 = -1.0 * z0 + 2.0 * z1 - 0.2;
    const double e0 = std::exp(l0), e1 = std::exp(l1);
    const Vector p = model_forward(m, ctx, x);
    EXPECT_NEAR(p(0), e0 / (e0 + e1), 1e-15);
    EXPECT_NEAR(p(1), e1 / (e0 + e1), 1e-15);
}

TEST(ModelForward, RejectsShapeMismatch) {
    const Graph g = path_graph(5);
    const FilterContext ctx{&g, nullptr};
    const Model m = build_model({LayerSpec{}}, 3, ctx, 1);
    EXPECT_THROW(model_forward(m, ctx, Matrix::Ones(5, 2)), InvalidArgument);
    const Graph small = path_graph(4);
    const FilterContext small_ctx{&small, nullptr};
    EXPECT_THROW(model_forward(m, small_ctx, Matrix::Ones(4, 1)), InvalidArgument);
}

TEST(ModelValidation, ChecksFeatureChaining) {
    const Graph g = path_graph(5);
    const FilterContext ctx{&g, nullptr};
    LayerSpec a, b;
    a.out_features = 3;
    b.in_features = 2;
    EXPECT_THROW(build_model({a, b}, 2, ctx, 1), InvalidArgument);
    b.in_features = 3;
    const Model m = build_model({a, b}, 2, ctx, 1);
    EXPECT_EQ(m.layers[1].bank.size(), 3u);
    EXPECT_EQ(m.readout.rows(), 5);
}

TEST(CrossEntropy, Examples) {
    Vector onehot = Vector::Zero(3);
    onehot(1) = 1.0;
    EXPECT_NEAR(cross_entropy(onehot, 1), 0.0, 1e-11);
    const Vector uni = Vector::Constant(5, 0.2);
    EXPECT_NEAR(cross_entropy(uni, 3), std::log(5.0), 1e-10);
    EXPECT_THROW(cross_entropy(uni, 5), InvalidArgument);
    EXPECT_THROW(cross_entropy(uni, -1), InvalidArgument);
}

TEST(ModelBackward, FiniteDifferenceFullModel) {
    Rng rng(2024);
    const Graph g = random_graph(rng, 6, 0.5, true);
    const FilterContext ctx{&g, nullptr};
    LayerSpec spec;
    spec.order = 2;
    spec.out_features = 2;
    Model m = build_model({spec}, 3, ctx, 77);
    std::vector<Sample> batch;
    for (Index k = 0; k < 4; ++k) batch.push_back({random_matrix(rng, 6, 1), k % 3, Split::train});

    const auto grad = flatten(batch_gradient(m, ctx, batch));
    auto params = m.parameter_blocks();
    std::vector<std::pair<std::size_t, std::size_t>> where;
    for (std::size_t b = 0; b < params.size(); ++b)
        for (std::size_t i = 0; i < params[b].size(); ++i) where.emplace_back(b, i);
    ASSERT_EQ(where.size(), grad.size());

    const double h = 1e-6;
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const std::size_t pick = uniform_index(rng, where.size());
        double& v = params[where[pick].first][where[pick].second];
        const double saved = v;
        v = saved + h;
        const double up = batch_loss(m, ctx, batch);
        v = saved - h;
        const double down = batch_loss(m, ctx, batch);
        v = saved;
        worst = std::max(worst, relative_error(grad[pick], (up - down) / (2 * h), 1e-8));
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(ModelBackward, TwoLayerFiniteDifferenceAllFamilies) {
    Rng rng(5);
    const Graph g = normalize_by_spectral_radius(random_graph(rng, 7, 0.5, true));
    const Spectrum sp = eigendecompose(g);
    const FilterContext ctx{&g, &sp};
    for (auto fam : {FilterFamily::polynomial, FilterFamily::spectral, FilterFamily::node_variant,
                     FilterFamily::edge_variant, FilterFamily::hybrid_ev, FilterFamily::spectral_ev}) {
        LayerSpec a, b;
        a.family = b.family = fam;
        a.order = b.order = 2;
        a.num_knots = b.num_knots = 3;
        a.privileged_size = b.privileged_size = 2;
        a.out_features = 2;
        a.bias = true;
        b.in_features = 2;
        b.out_features = 2;
        b.nonlinearity = Nonlinearity::none;
        Model m = build_model({a, b}, 2, ctx, 31);
        std::vector<Sample> batch;
        for (Index k = 0; k < 3; ++k) batch.push_back({random_matrix(rng, 7, 1), k % 2, Split::train});
        const auto grad = flatten(batch_gradient(m, ctx, batch));
        auto params = m.parameter_blocks();
        std::size_t idx = 0;
        double worst = 0.0;
        for (auto block : params)
            for (double& v : block) {
                const double saved = v, h = 1e-6;
                v = saved + h;
                const double up = batch_loss(m, ctx, batch);
                v = saved - h;
                const double down = batch_loss(m, ctx, batch);
                v = saved;
                worst = std::max(worst, relative_error(grad[idx++], (up - down) / (2 * h), 1e-7));
            }
        EXPECT_LT(worst, 1e-4) << to_string(fam);
    }
}

TEST(Adam, ZeroGradientLeavesParameters) {
    std::vector<double> p{1.0, -2.0, 3.0}, g(3, 0.0);
    std::vector<std::span<double>> ps{p};
    std::vector<std::span<const double>> gs{std::span<const double>(g)};
    AdamState st = adam_init(ps);
    for (int t = 0; t < 5; ++t) adam_step(ps, gs, st, AdamConfig{});
    EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(Adam, FirstStepAndConstantGradient) {
    AdamConfig cfg;
    const std::vector<double> g{0.3, -4.0, 1e-3};
    std::vector<double> p(3, 0.0);
    std::vector<std::span<double>> ps{p};
    std::vector<std::span<const double>> gs{std::span<const double>(g)};
    AdamState st = adam_init(ps);
    adam_step(ps, gs, st, cfg);
    for (int i = 0; i < 3; ++i) {
        // m_hat = g, v_hat = g^2 after one step.
        const double expect = -cfg.learning_rate * g[i] / (std::abs(g[i]) + cfg.epsilon);
        EXPECT_NEAR(p[i], expect, 1e-15);
        EXPECT_NEAR(p[i], -cfg.learning_rate * (g[i] > 0 ? 1 : -1), 1e-7);
    }
    for (int t = 0; t < 2000; ++t) {
        const std::vector<double> before = p;
        adam_step(ps, gs, st, cfg);
        if (t == 1999)
            for (int i = 0; i < 3; ++i)
                EXPECT_NEAR(p[i] - before[i], -cfg.learning_rate * (g[i] > 0 ? 1 : -1), 1e-7);
    }
}

TEST(Adam, NonFiniteGradientNamesBlock) {
    std::vector<double> a{1.0}, b{1.0, 2.0};
    const std::vector<double> ga{0.5}, gb{0.1, std::nan("")};
    std::vector<std::span<double>> ps{a, b};
    std::vector<std::span<const double>> gs{std::span<const double>(ga), std::span<const double>(gb)};
    AdamState st = adam_init(ps);
    try {
        adam_step(ps, gs, st, AdamConfig{});
        FAIL() << "expected NumericFailure";
    } catch (const NumericFailure& e) {
        EXPECT_NE(std::string(e.what()).find("block 1"), std::string::npos);
    }
    EXPECT_EQ(a[0], 1.0);
    EXPECT_EQ(st.step, 0);
}

TEST(Adam, ConfigValidation) {
    AdamConfig c;
    c.learning_rate = 0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.beta1 = 1.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Train, ZeroEpochsLeavesModel) {
    const Graph g = path_graph(4);
    const FilterContext ctx{&g, nullptr};
    LayerSpec spec;
    spec.order = 1;
    const Model m = build_model({spec}, 2, ctx, 4);
    AdamConfig cfg;
    cfg.epochs = 0;
    const auto r = train(m, toy_dataset(1, 20), ctx, cfg);
    EXPECT_TRUE(r.trace.empty());
    EXPECT_EQ(flatten(r.model), flatten(m));
}

TEST(Train, EmptyTrainSplitRejected) {
    const Graph g = path_graph(4);
    const FilterContext ctx{&g, nullptr};
    const Model m = build_model({LayerSpec{}}, 2, ctx, 4);
    Dataset d = toy_dataset(1, 6);
    for (auto& s : d.samples) s.split = Split::test;
    EXPECT_THROW(train(m, d, ctx, AdamConfig{}), InvalidArgument);
    EXPECT_THROW(evaluate(m, d, Split::val, ctx), InvalidArgument);
}

TEST(Train, ToySetIsSeparableAndLearned) {
    const Dataset d = toy_dataset(8, 40);
    // Perceptron on the raw signals certifies linear separability.
    Vector w = Vector::Zero(4);
    double bias = 0.0;
    bool separated = false;
    for (int pass = 0; pass < 1000 && !separated; ++pass) {
        separated = true;
        for (const auto& s : d.samples) {
            const double y = s.label == 0 ? 1.0 : -1.0;
            if (y * (w.dot(s.signal.col(0)) + bias) <= 0) {
                w += y * s.signal.col(0);
                bias += y;
                separated = false;
            }
        }
    }
    ASSERT_TRUE(separated);

    const Graph g = path_graph(4);
    const FilterContext ctx{&g, nullptr};
    LayerSpec spec;
    spec.order = 1;
    const Model m = build_model({spec}, 2, ctx, 12);
    AdamConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.epochs = 200;
    cfg.batch_size = 8;
    cfg.seed = 3;
    const auto r = train(m, d, ctx, cfg);
    ASSERT_EQ(r.trace.size(), 200u);
    EXPECT_LT(r.trace[9].mean_train_loss, r.trace[0].mean_train_loss);
    bool reached = false;
    for (const auto& e : r.trace) reached = reached || e.train_accuracy == 1.0;
    EXPECT_TRUE(reached);
    EXPECT_EQ(evaluate(r.model, d, Split::train, ctx), 1.0);
    EXPECT_FALSE(r.trace[0].val_accuracy.has_value());
}

TEST(Train, FullBatchIsOneStepPerEpoch) {
    const Graph g = path_graph(4);
    const FilterContext ctx{&g, nullptr};
    LayerSpec spec;
    spec.order = 1;
    const Model m = build_model({spec}, 2, ctx, 4);
    Dataset d = toy_dataset(2, 10);
    // One class only keeps every gradient entry well away from cancellation.
    for (auto& s : d.samples) s.label = 0;
    AdamConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 50;
    const auto r = train(m, d, ctx, cfg);
    EXPECT_EQ(r.trace.size(), 1u);

    // One manual ADAM step on the mean gradient must reproduce it.
    Model manual = m;
    Model grad = batch_gradient(m, ctx, d.samples);
    for (auto b : grad.parameter_blocks())
        for (double& v : b) v /= 10.0;
    auto ps = manual.parameter_blocks();
    auto gb = grad.parameter_blocks();
    std::vector<std::span<const double>> gs(gb.begin(), gb.end());
    AdamState st = adam_init(ps);
    adam_step(ps, gs, st, cfg);
    const auto a = flatten(manual), b = flatten(r.model);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);

    cfg.epochs = 7;
    EXPECT_EQ(train(m, d, ctx, cfg).trace.size(), 7u);
}

TEST(Train, ValidationAccuracyReported) {
    const Graph g = path_graph(4);
    const FilterContext ctx{&g, nullptr};
    Dataset d = toy_dataset(2, 12);
    for (std::size_t k = 8; k < d.samples.size(); ++k) d.samples[k].split = Split::val;
    AdamConfig cfg;
    cfg.epochs = 2;
    const auto r = train(build_model({LayerSpec{}}, 2, ctx, 1), d, ctx, cfg);
    ASSERT_TRUE(r.trace[1].val_accuracy.has_value());
}

TEST(Train, Deterministic) {
    Rng rng(6);
    const Graph g = normalize_by_spectral_radius(random_graph(rng, 8, 0.4, true));
    const Spectrum sp = eigendecompose(g);
    const FilterContext ctx{&g, &sp};
    Dataset d;
    d.num_classes = 3;
    for (Index k = 0; k < 30; ++k) d.samples.push_back({random_matrix(rng, 8, 1), k % 3, Split::train});
    LayerSpec spec;
    spec.family = FilterFamily::hybrid_ev;
    spec.order = 2;
    spec.privileged_size = 3;
    spec.strategy = SelectionStrategy::spectral_proxies;
    spec.out_features = 2;
    AdamConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 7;
    cfg.seed = 99;
    const auto a = train(build_model({spec}, 3, ctx, 5), d, ctx, cfg);
    const auto b = train(build_model({spec}, 3, ctx, 5), d, ctx, cfg);
    EXPECT_EQ(flatten(a.model), flatten(b.model));
    cfg.seed = 100;
    const auto c = train(build_model({spec}, 3, ctx, 5), d, ctx, cfg);
    EXPECT_NE(flatten(a.model), flatten(c.model));
}

TEST(Evaluate, TieBreaksToLowestClass) {
    const Graph g = path_graph(4);
    const FilterContext ctx{&g, nullptr};
    Model m = build_model({LayerSpec{}}, 3, ctx, 1);
    m.readout.setZero();
    Dataset d = toy_dataset(1, 10);
    d.num_classes = 3;
    for (auto& s : d.samples) s.label = 0;
    EXPECT_EQ(evaluate(m, d, Split::train, ctx), 1.0);
    for (auto& s : d.samples) s.label = 2;
    EXPECT_EQ(evaluate(m, d, Split::train, ctx), 0.0);
}

TEST(Evaluate, RandomLabelsNearChance) {
    Rng rng(17);
    const Graph g = random_graph(rng, 6, 0.5, true);
    const FilterContext ctx{&g, nullptr};
    LayerSpec spec;
    spec.order = 2;
    const Model m = build_model({spec}, 5, ctx, 3);
    Dataset d;
    d.num_classes = 5;
    for (Index k = 0; k < 10000; ++k)
        d.samples.push_back({random_matrix(rng, 6, 1), static_cast<Index>(uniform_index(rng, 5)),
                             Split::test});
    const double acc = evaluate(m, d, Split::test, ctx);
    const double sigma = std::sqrt(0.2 * 0.8 / 10000.0);
    EXPECT_LT(std::abs(acc - 0.2), 3 * sigma);
}

TEST(GradientFlow, EveryFamilyOverSeeds) {
    for (auto fam : {FilterFamily::polynomial, FilterFamily::spectral, FilterFamily::node_variant,
                     FilterFamily::edge_variant, FilterFamily::hybrid_ev, FilterFamily::spectral_ev}) {
        int flowing = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            Rng rng(derive_seed(seed, "flow"));
            Graph g = random_graph(rng, 10, 0.4, true);
            g = normalize_by_spectral_radius(g);
            const Spectrum sp = eigendecompose(g);
            const FilterContext ctx{&g, &sp};
            LayerSpec spec;
            spec.family = fam;
            spec.order = 3;
            spec.privileged_size = 3;
            spec.out_features = 4;
            const Model m = build_model({spec}, 3, ctx, seed);
            std::vector<Sample> batch;
            for (Index k = 0; k < 8; ++k)
                batch.push_back({random_matrix(rng, 10, 1), k % 3, Split::train});
            const Model grad = batch_gradient(m, ctx, batch);
            bool any = false;
            for (const auto& f : grad.layers[0].bank)
                for (auto b : coefficient_blocks(f))
                    for (double v : b) any = any || v != 0.0;
            flowing += any;
        }
        EXPECT_GE(flowing, 99) << to_string(fam);
    }
}

TEST(LayerForward, BiasShiftsEveryNodeBeforeNonlinearity) {
    const Graph g = path_graph(3);
    const FilterContext ctx{&g, nullptr};
    Layer layer = poly_layer(1, 2, {PolyParams{{1.0}}, PolyParams{{-1.0}}});
    layer.spec.bias = true;
    layer.bias = Vector::Zero(2);
    layer.bias << 0.5, 2.0;
    Matrix x(3, 1);
    x << 1.0, -1.0, 3.0;
    Matrix expect(3, 2);
    expect << 1.5, 1.0, 0.0, 3.0, 3.5, 0.0;
    EXPECT_EQ(layer_forward(layer, ctx, x), expect);
    layer.bias = Vector::Zero(3);
    EXPECT_THROW(layer_forward(layer, ctx, x), InvalidArgument);
}

TEST(Nonlinearity, ParseRoundTrip) {
    EXPECT_EQ(parse_nonlinearity("relu"), Nonlinearity::relu);
    EXPECT_EQ(parse_nonlinearity(to_string(Nonlinearity::none)), Nonlinearity::none);
    EXPECT_THROW(parse_nonlinearity("tanh"), InvalidArgument);
}

TEST(Gradcheck, EveryFamilyBelowTolerance) {
    const auto results = gradient_check(11);
    ASSERT_EQ(results.size(), 6u);
    for (const auto& r : results) {
        EXPECT_EQ(r.probes, 20);
        EXPECT_LT(r.max_relative_error, 1e-5) << to_string(r.family);
    }
    const auto again = gradient_check(11);
    for (std::size_t k = 0; k < results.size(); ++k)
        EXPECT_EQ(results[k].max_relative_error, again[k].max_relative_error);
    GradcheckOptions bad;
    bad.step = 0.0;
    EXPECT_THROW(gradient_check(1, bad), InvalidArgument);
}
