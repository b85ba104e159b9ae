#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = SSHASH_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("sshash_cli_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

int run(const std::string& args) {
    const std::string cmd = "'" + kCli + "' " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

const std::string kTiny =
    " --dataset synthetic --bits 8 --set synthetic_classes=3 --set synthetic_per_class=30"
    " --set synthetic_dim=8 --set epochs=2 --set batch_size=16 --set hidden=8"
    " --set decoder_hidden=8 --k 5";

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("train --bits") == 2);
    CHECK(run("train") == 2);  // no dataset configured
    CHECK(run("train --dataset synthetic --set nosuchkey=1") == 2);
    CHECK(run("train --dataset synthetic --rho 0") == 2);
    CHECK(run("train --dataset /nonexistent/features.txt") == 2);
    CHECK(run("--help") == 0);
}

TEST_CASE("data errors exit with code 3") {
    TempDir tmp;
    const auto bad = tmp.path / "bad.txt";
    std::ofstream(bad) << "1 2\n3\n";
    CHECK(run("train --dataset " + bad.string() + " --out " + tmp.path.string()) == 3);
    CHECK(run("evaluate" + kTiny + " --checkpoint " + bad.string() + " --out " +
              tmp.path.string()) == 3);
}

TEST_CASE("identical invocations produce identical files") {
    TempDir a, b;
    for (const auto* d : {&a, &b}) {
        const std::string out = " --out " + d->path.string();
        REQUIRE(run("train" + kTiny + " --seed 7" + out) == 0);
        const std::string ckpt = " --checkpoint " + (d->path / "model.ckpt").string();
        REQUIRE(run("hash" + kTiny + ckpt + " --split test -o " + (d->path / "q.codes").string()) ==
                0);
        REQUIRE(run("hash" + kTiny + ckpt + " --split train -o " + (d->path / "i.codes").string()) ==
                0);
        REQUIRE(run("evaluate" + kTiny + ckpt + " --split test --per-query" + out) == 0);
        REQUIRE(run("search --index " + (d->path / "i.codes").string() + " --queries " +
                    (d->path / "q.codes").string() + " --k 5 -o " + (d->path / "n.csv").string()) ==
                0);
    }
    for (const char* f : {"model.ckpt", "train_log.csv", "q.codes", "i.codes", "metrics.csv",
                          "per_query.csv", "n.csv"}) {
        CAPTURE(f);
        CHECK(slurp(a.path / f) == slurp(b.path / f));
    }
    TempDir c;
    REQUIRE(run("train" + kTiny + " --seed 8 --out " + c.path.string()) == 0);
    CHECK(slurp(c.path / "model.ckpt") != slurp(a.path / "model.ckpt"));
}

TEST_CASE("sweep and stats from the command line") {
    TempDir tmp;
    const std::string out = " --out " + tmp.path.string();
    REQUIRE(run("sweep" + kTiny + out +
                " --set methods=ssb-vae,psh-gs --set rhos=1,0.5 --set alpha_grid=1"
                " --set beta_grid=1 --set seeds=0") == 0);
    CHECK(fs::exists(tmp.path / "summary.csv"));
    CHECK(run("stats " + (tmp.path / "runs.csv").string() + out) == 0);
    CHECK(fs::exists(tmp.path / "stats.csv"));
    CHECK(run("stats " + (tmp.path / "nothing.csv").string() + out) == 2);
    std::ofstream(tmp.path / "junk.csv") << "a,b\n1\n";
    CHECK(run("stats " + (tmp.path / "junk.csv").string() + out) == 3);
}
