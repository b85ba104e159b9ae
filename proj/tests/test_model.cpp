#include <doctest.h>

#include <sstream>

#include "sshash/model.hpp"
#include "test_util.hpp"

using namespace sshash;

namespace {

ModelSpec small_spec(LatentKind latent) {
    ModelSpec s;
    s.input_dim = 6;
    s.bits = 4;
    s.num_classes = 3;
    s.latent = latent;
    s.encoder_hidden = {5};
    s.decoder_hidden = {5};
    return s;
}

std::string save(const ModelBundle& m) {
    std::ostringstream out;
    save_checkpoint(out, m);
    return out.str();
}

ModelBundle load(const std::string& text) {
    std::istringstream in(text);
    return load_checkpoint(in);
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
    const auto at = s.find(from);
    REQUIRE(at != std::string::npos);
    return s.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("initialization is seed-deterministic and shaped by the spec") {
    const auto a = init_model(small_spec(LatentKind::bernoulli), 3);
    const auto b = init_model(small_spec(LatentKind::bernoulli), 3);
    const auto c = init_model(small_spec(LatentKind::bernoulli), 4);
    CHECK(same_parameters(a, b));
    CHECK_FALSE(same_parameters(a, c));
    CHECK(a.input_dim() == 6);
    CHECK(a.code_head.out_dim() == 4);
    CHECK(a.has_predictor());
    CHECK(a.predictor.out_dim() == 3);
    CHECK(a.decoder.out_dim() == 6);

    const auto g = init_model(small_spec(LatentKind::gaussian), 3);
    CHECK(g.code_head.out_dim() == 8);

    auto none = small_spec(LatentKind::bernoulli);
    none.num_classes = 0;
    CHECK_FALSE(init_model(none, 1).has_predictor());
    none.encoder_hidden.clear();
    CHECK_THROWS_AS(init_model(none, 1), InvalidInput);
}

TEST_CASE("checkpoint round trip is bitwise") {
    std::mt19937_64 rng(1);
    for (auto latent : {LatentKind::bernoulli, LatentKind::gaussian}) {
        auto m = init_model(small_spec(latent), 11);
        m.config_digest = digest_hex("abc");
        m.scale_low.assign(6, -0.5);
        m.scale_high.assign(6, 1.0 / 3.0);
        if (latent == LatentKind::gaussian) fit_thresholds(m, testutil::random_matrix(20, 6, rng));
        const std::string text = save(m);
        const auto back = load(text);
        CHECK(same_parameters(m, back));
        CHECK(back.medians == m.medians);
        CHECK(back.config_digest == m.config_digest);
        CHECK(save(back) == text);

        const Matrix x = testutil::random_matrix(8, 6, rng);
        const auto ca = hash_features(m, x), cb = hash_features(back, x);
        CHECK(ca == cb);
    }
}

TEST_CASE("corrupted checkpoints are rejected with located errors") {
    const auto m = init_model(small_spec(LatentKind::bernoulli), 2);
    const std::string good = save(m);

    auto message = [](const std::string& text) {
        try {
            load(text);
        } catch (const InvalidInput& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK_FALSE(message(good.substr(0, good.size() / 2)).empty());
    CHECK_FALSE(message("garbage\n").empty());
    CHECK(message(replace_once(good, "bits 4", "bits x")).find("line") != std::string::npos);
    CHECK_FALSE(message(replace_once(good, "bits 4", "bits 5")).empty());
    CHECK_FALSE(message(replace_once(good, "latent bernoulli", "latent cauchy")).empty());
}

TEST_CASE("gaussian hashing needs fitted medians") {
    auto g = init_model(small_spec(LatentKind::gaussian), 5);
    std::mt19937_64 rng(2);
    const Matrix x = testutil::random_matrix(10, 6, rng);
    CHECK_THROWS_AS(hash_features(g, x), InvalidState);
    fit_thresholds(g, x);
    REQUIRE(g.medians.size() == 4);
    const auto codes = hash_features(g, x);
    // Each bit is set for at most half the reference rows.
    for (std::size_t b = 0; b < 4; ++b) {
        std::size_t ones = 0;
        for (const auto& c : codes) ones += c.test(b);
        CHECK(ones <= 5);
    }
}

TEST_CASE("feature scaling is applied before encoding") {
    auto m = init_model(small_spec(LatentKind::bernoulli), 5);
    Matrix x(1, 6, {2, 4, 6, 8, 10, 12});
    m.scale_low.assign(6, 0.0);
    m.scale_high.assign(6, 4.0);
    const Matrix p = prepare_features(m, x);
    CHECK(p(0, 0) == 0.5);
    CHECK(p(0, 1) == 1.0);
    CHECK(p(0, 5) == 1.0);
    CHECK_THROWS_AS(prepare_features(m, Matrix(1, 5)), InvalidInput);
}

TEST_CASE("independent streams and digests") {
    auto a = stream_rng(7, 1), b = stream_rng(7, 2), c = stream_rng(7, 1);
    const auto va = a(), vb = b(), vc = c();
    CHECK(va == vc);
    CHECK(va != vb);
    CHECK(digest_hex("") == "cbf29ce484222325");
    CHECK(digest_hex("a") == "af63dc4c8601ec8c");
}
