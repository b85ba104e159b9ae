#include <doctest.h>

#include <sstream>

#include "sshash/run_config.hpp"

using namespace sshash;

namespace {

std::string usage_error(auto&& fn) {
    try {
        fn();
    } catch (const UsageError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("defaults follow the documented protocol") {
    const RunConfig c;
    CHECK(c.train.epochs == 30);
    CHECK(c.train.batch_size == 100);
    CHECK(c.k == 100);
    CHECK(c.rhos.size() == 10);
    CHECK(c.alpha_grid == decade_grid(-6, 6));
    CHECK(c.seeds.size() == 5);
    CHECK(c.mask_strategy == MaskStrategy::stratified);
}

TEST_CASE("text configuration with comments and overrides") {
    RunConfig c;
    std::istringstream in(
        "# run\n"
        "dataset = synthetic   # generated\n"
        "bits = 32\n"
        "mode = psh-gs\n"
        "hidden = 64, 32\n"
        "decoder_hidden = none\n"
        "rhos = 1, 0.5\n"
        "alpha_grid = decades:-2:2\n"
        "kl_weight = 0.25\n"
        "margin = auto\n");
    c.apply_text(in);
    CHECK(c.dataset == "synthetic");
    CHECK(c.train.bits == 32);
    CHECK(c.train.mode == SupervisionMode::pairwise_gt);
    CHECK(c.train.latent == LatentKind::bernoulli);
    CHECK(c.train.encoder_hidden == std::vector<std::size_t>{64, 32});
    CHECK(c.train.decoder_hidden.empty());
    CHECK(c.rhos == std::vector<double>{1.0, 0.5});
    CHECK(c.alpha_grid == std::vector<double>{1e-2, 1e-1, 1.0, 1e1, 1e2});
    CHECK_FALSE(c.train.kl_weight_auto);
    CHECK(c.train.weights.kl == 0.25);
    CHECK(c.train.margin_auto);

    c.apply_override("mode=vdsh-s");
    CHECK(c.train.latent == LatentKind::gaussian);
    CHECK(c.train.mode == SupervisionMode::pointwise);
    c.apply_override("seed=9");
    CHECK(c.train.seed == 9);
}

TEST_CASE("errors name the key and the line") {
    RunConfig c;
    CHECK(usage_error([&] { c.set("bitz", "3"); }).find("bitz") != std::string::npos);
    CHECK(usage_error([&] { c.set("bits", "many"); }).find("bits") != std::string::npos);
    CHECK_FALSE(usage_error([&] { c.set("rho", "1.5"); }).empty());
    CHECK_FALSE(usage_error([&] { c.set("mode", "psychic"); }).empty());
    CHECK_FALSE(usage_error([&] { c.apply_override("novalue"); }).empty());
    std::istringstream in("bits = 16\nepochs = -3\n");
    CHECK(usage_error([&] { c.apply_text(in, "run.cfg"); }).find("run.cfg:2:") !=
          std::string::npos);
    CHECK_FALSE(usage_error([&] { c.apply_file("/nonexistent/run.cfg"); }).empty());
}

TEST_CASE("canonical text round trips") {
    RunConfig c;
    c.set("dataset", "synthetic");
    c.set("bits", "24");
    c.set("lr", "0.0005");
    c.set("beta_grid", "0.1,1,10");
    c.set("methods", "ssb-vae,unsup");
    c.set("scale", "none");
    const std::string text = c.to_text();
    RunConfig back;
    std::istringstream in(text);
    back.apply_text(in);
    CHECK(back.to_text() == text);
    CHECK(back.train.bits == 24);
    CHECK(back.beta_grid == std::vector<double>{0.1, 1.0, 10.0});
    for (const auto& key : config_keys()) CHECK(text.find(key + " = ") != std::string::npos);
}

TEST_CASE("method names map to latent and mode") {
    for (const char* m : {"ssb-vae", "psh-gs", "vdsh-s", "unsup"}) {
        TrainConfig t;
        apply_method(t, m);
        CHECK(method_name(t.mode, t.latent) == m);
    }
    CHECK_FALSE(is_method_name("itq"));
    CHECK(method_name(SupervisionMode::unsup, LatentKind::gaussian) == "gaussian-unsup");
}

TEST_CASE("scaling resolution and dataset loading") {
    RunConfig c;
    c.set("dataset", "synthetic");
    c.set("synthetic_classes", "3");
    c.set("synthetic_per_class", "20");
    c.set("synthetic_dim", "4");
    CHECK(c.use_minmax());
    CHECK(c.resolved_train().minmax_scale);
    c.set("scale", "none");
    CHECK_FALSE(c.use_minmax());
    const auto d = load_dataset(c);
    CHECK(d.size() == 60);
    CHECK(d.rows_in(Split::train).size() == 48);
    CHECK(d.rows_in(Split::val).size() == 6);
    c.set("train_count", "30");
    c.set("val_count", "10");
    c.set("test_count", "5");
    const auto e = load_dataset(c);
    CHECK(e.rows_in(Split::train).size() == 30);
    CHECK(e.rows_in(Split::unused).size() == 15);

    RunConfig sparse;
    sparse.set("format", "sparse");
    CHECK_FALSE(sparse.use_minmax());
    RunConfig missing;
    CHECK_THROWS(load_dataset(missing));
}
