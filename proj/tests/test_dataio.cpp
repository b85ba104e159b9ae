#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "sshash/dataio.hpp"
#include "sshash/diffnet.hpp"
#include "test_util.hpp"

using namespace sshash;

namespace {

std::string error_of(auto&& fn) {
    try {
        fn();
    } catch (const InvalidInput& e) {
        return e.what();
    }
    return {};
}

// Softmax regression trained full-batch with Adam; returns held-out accuracy.
double linear_probe_accuracy(const LabeledDataset& data) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < data.size(); ++i) ((i / 10) % 5 == 0 ? test : train).push_back(i);
    const Matrix x = data.features.gather_rows(train);
    const Matrix y = data.label_matrix(train);
    std::mt19937_64 rng(5);
    const LayerSpec spec[] = {{data.dim(), static_cast<std::size_t>(data.num_classes)}};
    DenseNet net = DenseNet::glorot(spec, rng);
    AdamState adam(net.parameter_count(), {.learning_rate = 0.05});
    for (int step = 0; step < 150; ++step) {
        auto fr = forward(net, x);
        Matrix g(x.rows(), y.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const auto z = fr.output.row(r);
            const double mx = *std::max_element(z.begin(), z.end());
            double s = 0.0;
            for (double v : z) s += std::exp(v - mx);
            for (std::size_t c = 0; c < z.size(); ++c)
                g(r, c) = (std::exp(z[c] - mx) / s - y(r, c)) / static_cast<double>(x.rows());
        }
        adam_step(net, backward(net, fr.tape, g, false), adam);
    }
    const Matrix scores = predict(net, data.features.gather_rows(test));
    std::size_t correct = 0;
    for (std::size_t r = 0; r < test.size(); ++r) {
        const auto z = scores.row(r);
        const auto best = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
        correct += best == data.labels[test[r]][0];
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace

TEST_CASE("dense identity file with sidecar labels") {
    std::istringstream f("1 0\n0 1\n"), l("0\n1\n");
    const auto d = load_dense(f, &l);
    CHECK(d.size() == 2);
    CHECK(d.dim() == 2);
    CHECK(d.features(0, 0) == 1.0);
    CHECK(d.features(0, 1) == 0.0);
    CHECK(d.features(1, 1) == 1.0);
    CHECK(d.num_classes == 2);
    CHECK(d.labels == std::vector<LabelSet>{{0}, {1}});
    CHECK(d.rows_in(Split::train).size() == 2);
}

TEST_CASE("sparse line materializes two nonzeros") {
    std::istringstream in("# comment\n1 10 2\n1 3:0.5 7:0.25\n");
    const auto d = load_sparse(in, false, false);
    REQUIRE(d.size() == 1);
    REQUIRE(d.dim() == 10);
    int nonzero = 0;
    for (double v : d.features.values()) nonzero += v != 0.0;
    CHECK(nonzero == 2);
    CHECK(d.features(0, 3) == 0.5);
    CHECK(d.features(0, 7) == 0.25);
    CHECK(d.labels[0] == LabelSet{1});

    std::istringstream again("1 10 2\n1 3:0.5 7:0.25\n");
    const auto n = load_sparse(again);
    CHECK(n.features(0, 3) == 1.0);
    CHECK(n.features(0, 7) == 0.5);
}

TEST_CASE("multi-label sparse rows") {
    std::istringstream in("2 4 3\n2,0 0:1\n1 1:2\n");
    const auto d = load_sparse(in, true);
    CHECK(d.multi_label);
    CHECK(d.labels[0] == LabelSet{0, 2});
    const std::size_t rows[] = {0, 1};
    const Matrix y = d.label_matrix(rows);
    CHECK(y(0, 0) == 1.0);
    CHECK(y(0, 1) == 0.0);
    CHECK(y(0, 2) == 1.0);
    std::istringstream single("1 4 3\n2,0 0:1\n");
    CHECK(error_of([&] { load_sparse(single); }).find("line 2") != std::string::npos);
}

TEST_CASE("malformed input yields located errors") {
    std::istringstream ragged("1 2\n3\n");
    CHECK(error_of([&] { load_dense(ragged); }).find("line 2") != std::string::npos);
    std::istringstream word("1 2\n3 x\n");
    CHECK(error_of([&] { load_dense(word); }).find("line 2") != std::string::npos);
    std::istringstream nan("1 nan\n");
    CHECK(error_of([&] { load_dense(nan); }).find("line 1") != std::string::npos);

    std::istringstream overflow("1 4 2\n0 4:1\n");
    const auto msg = error_of([&] { load_sparse(overflow); });
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("dimension") != std::string::npos);
    std::istringstream no_colon("1 4 2\n0 3\n");
    CHECK(error_of([&] { load_sparse(no_colon); }).find("line 2") != std::string::npos);
    std::istringstream bad_label("1 4 2\n5 0:1\n");
    CHECK(error_of([&] { load_sparse(bad_label); }).find("line 2") != std::string::npos);
    std::istringstream header("1 4\n");
    CHECK(error_of([&] { load_sparse(header); }).find("line 1") != std::string::npos);
    std::istringstream short_file("3 4 2\n0 0:1\n");
    CHECK_FALSE(error_of([&] { load_sparse(short_file); }).empty());
    std::istringstream long_file("1 4 2\n0 0:1\n1 1:1\n");
    CHECK(error_of([&] { load_sparse(long_file); }).find("line 3") != std::string::npos);

    std::istringstream f("1\n2\n"), l("0\n-1\n");
    CHECK(error_of([&] { load_dense(f, &l); }).find("line 2") != std::string::npos);
    std::istringstream f2("1\n2\n"), l2("0\n");
    CHECK_FALSE(error_of([&] { load_dense(f2, &l2); }).empty());
}

TEST_CASE("write then read round trips bitwise") {
    std::mt19937_64 rng(9);
    LabeledDataset d;
    d.features = testutil::random_matrix(20, 7, rng, -3.0, 3.0);
    d.features(0, 0) = 1e-300;
    d.features(1, 1) = 0.1;
    for (std::size_t i = 0; i < 20; ++i) d.labels.push_back({static_cast<int>(i % 3)});
    d.num_classes = 3;

    std::stringstream fs, ls;
    write_dense(fs, d.features);
    write_labels(ls, d.labels);
    const auto back = load_dense(fs, &ls);
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);

    LabeledDataset s;
    s.features = testutil::random_matrix(15, 9, rng, 0.0, 1.0);
    for (std::size_t i = 0; i < 15; ++i)
        for (std::size_t c = 0; c < 9; ++c)
            if ((i + c) % 3 == 0) s.features(i, c) = 0.0;
    for (std::size_t i = 0; i < 15; ++i) s.labels.push_back({static_cast<int>(i % 4)});
    s.num_classes = 4;
    std::stringstream ss;
    write_sparse(ss, s);
    const auto sback = load_sparse(ss, false, false);
    CHECK(sback.features == s.features);
    CHECK(sback.labels == s.labels);
}

TEST_CASE("splits partition rows with exact counts and seed determinism") {
    auto d = make_synthetic({.classes = 4, .per_class = 25, .dim = 3, .seed = 1});
    split(d, {1.0, 0.0, 0.0}, 3);
    CHECK(d.rows_in(Split::train).size() == 100);

    split(d, {0.8, 0.1, 0.1}, 3);
    CHECK(d.rows_in(Split::train).size() == 80);
    CHECK(d.rows_in(Split::val).size() == 10);
    CHECK(d.rows_in(Split::test).size() == 10);
    const auto tags = d.split;
    split(d, {0.8, 0.1, 0.1}, 3);
    CHECK(d.split == tags);
    split(d, {0.8, 0.1, 0.1}, 4);
    CHECK(d.split != tags);

    split(d, {0.5, 0.2, 0.1}, 3);
    CHECK(d.rows_in(Split::train).size() == 50);
    CHECK(d.rows_in(Split::unused).size() == 20);
    CHECK_THROWS_AS(split(d, {0.8, 0.3, 0.1}, 3), InvalidInput);

    split_counts(d, 60, 20, 20, 7);
    CHECK(d.rows_in(Split::train).size() == 60);
    CHECK(d.rows_in(Split::test).size() == 20);
    CHECK_THROWS_AS(split_counts(d, 90, 20, 0, 7), InvalidInput);
}

TEST_CASE("min-max scaling uses the fitted rows only") {
    Matrix m(3, 2, {0.0, 10.0, 2.0, 20.0, 4.0, 40.0});
    const std::size_t fit_rows[] = {0, 1};
    const auto scaler = fit_minmax(m, fit_rows);
    scaler.apply(m);
    CHECK(m(0, 0) == 0.0);
    CHECK(m(1, 0) == 1.0);
    CHECK(m(2, 0) == 1.0);  // clamped
    CHECK(m(1, 1) == 1.0);

    Matrix neg(1, 2, {-1.0, 1.0});
    CHECK_THROWS_AS(max_normalize_rows(neg), InvalidInput);
    Matrix zero(1, 2);
    max_normalize_rows(zero);
    CHECK(zero(0, 0) == 0.0);
}

TEST_CASE("synthetic generator: degenerate clusters, digest, range") {
    const auto tight = make_synthetic({.classes = 5, .per_class = 4, .dim = 6, .spread = 0.0});
    for (std::size_t i = 0; i < tight.size(); ++i) {
        CHECK(tight.labels[i][0] == static_cast<int>(i % 5));
        const auto same = tight.features.row(i % 5);
        CHECK(std::equal(same.begin(), same.end(), tight.features.row(i).begin()));
    }
    // Nearest neighbour among the other rows always shares the class.
    for (std::size_t i = 0; i < tight.size(); ++i) {
        std::size_t best = i == 0 ? 1 : 0;
        double best_d = 1e300;
        for (std::size_t j = 0; j < tight.size(); ++j) {
            if (j == i) continue;
            double dist = 0.0;
            for (std::size_t c = 0; c < tight.dim(); ++c) {
                const double diff = tight.features(i, c) - tight.features(j, c);
                dist += diff * diff;
            }
            if (dist < best_d) best_d = dist, best = j;
        }
        CHECK(tight.labels[best] == tight.labels[i]);
    }

    const SyntheticSpec spec{.classes = 10, .per_class = 500, .dim = 128, .spread = 0.5, .seed = 42};
    const auto a = make_synthetic(spec);
    CHECK(digest(a) == digest(make_synthetic(spec)));
    auto other = spec;
    other.seed = 43;
    CHECK(digest(a) != digest(make_synthetic(other)));
    CHECK(a.size() == 5000);
    const auto [lo, hi] = std::minmax_element(a.features.values().begin(), a.features.values().end());
    CHECK(*lo > 0.0);
    CHECK(*hi < 1.0);
    CHECK_NOTHROW(a.validate());
    CHECK_THROWS_AS(make_synthetic({.classes = 1}), InvalidInput);
    CHECK_THROWS_AS(make_synthetic({.spread = -1.0}), InvalidInput);
}

TEST_CASE("synthetic clusters are linearly separable") {
    const auto d = make_synthetic({.classes = 10, .per_class = 500, .dim = 128, .spread = 0.5, .seed = 3});
    CHECK(linear_probe_accuracy(d) > 0.95);
}

TEST_CASE("dataset validation") {
    auto d = make_synthetic({.classes = 3, .per_class = 2, .dim = 2});
    d.supervised[0] = 1;
    CHECK_NOTHROW(d.validate());
    d.split[0] = Split::test;
    CHECK_THROWS_AS(d.validate(), InvalidInput);
    d.split[0] = Split::train;
    d.labels[1] = {0, 1};
    CHECK_THROWS_AS(d.validate(), InvalidInput);
}
