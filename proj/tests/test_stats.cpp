#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sshash/stats.hpp"

using namespace sshash;

namespace {

ScoreTable make_table(std::size_t blocks, std::vector<std::string> methods,
                      const std::vector<double>& values) {
    ScoreTable t;
    t.methods = std::move(methods);
    for (std::size_t b = 0; b < blocks; ++b) t.blocks.push_back("b" + std::to_string(b));
    t.scores = Matrix(blocks, t.methods.size(), values);
    return t;
}

// p@100 per supervision level 0.1 .. 1.0, columns PSH, SSB-VAE, VDSH.
struct ReferenceColumns {
    const char* name;
    std::vector<double> scores;
    double friedman, vs_psh, vs_vdsh;  // printed p-values
    bool check_vdsh;
};

const ReferenceColumns kReference[] = {
    {"20news/32",
     {0.589, 0.734, 0.648, 0.606, 0.765, 0.697, 0.630, 0.787, 0.738, 0.682, 0.791, 0.771,
      0.762, 0.824, 0.788, 0.784, 0.843, 0.818, 0.815, 0.841, 0.831, 0.831, 0.864, 0.851,
      0.867, 0.880, 0.866, 0.866, 0.878, 0.876},
     1.1e-4, 6.3e-5, 3.7e-2, true},
    {"cifar/32",
     {0.687, 0.825, 0.805, 0.708, 0.840, 0.816, 0.737, 0.847, 0.820, 0.781, 0.873, 0.838,
      0.818, 0.879, 0.844, 0.857, 0.881, 0.849, 0.889, 0.880, 0.852, 0.901, 0.898, 0.854,
      0.903, 0.901, 0.863, 0.906, 0.910, 0.867},
     2.0e-2, 1.1e-1, 1.2e-2, false},
    {"snippets/32",
     {0.501, 0.565, 0.540, 0.490, 0.599, 0.558, 0.542, 0.620, 0.576, 0.551, 0.620, 0.595,
      0.564, 0.641, 0.634, 0.550, 0.634, 0.633, 0.553, 0.644, 0.648, 0.598, 0.637, 0.647,
      0.644, 0.648, 0.656, 0.696, 0.657, 0.661},
     7.4e-3, 1.0e-2, 8.9e-1, true},
    {"tmc/32",
     {0.738, 0.750, 0.730, 0.749, 0.754, 0.725, 0.757, 0.759, 0.736, 0.765, 0.775, 0.740,
      0.772, 0.778, 0.743, 0.782, 0.788, 0.758, 0.790, 0.795, 0.768, 0.798, 0.802, 0.769,
      0.806, 0.813, 0.781, 0.806, 0.818, 0.788},
     4.5e-5, 6.5e-2, 2.3e-5, true},
    {"cifar/16",
     {0.635, 0.816, 0.781, 0.684, 0.834, 0.782, 0.718, 0.849, 0.789, 0.765, 0.866, 0.796,
      0.820, 0.870, 0.811, 0.851, 0.879, 0.817, 0.877, 0.884, 0.818, 0.894, 0.893, 0.821,
      0.904, 0.906, 0.832, 0.906, 0.909, 0.836},
     1.8e-3, 1.9e-2, 2.2e-3, true},
    {"tmc/16",
     {0.723, 0.725, 0.705, 0.731, 0.742, 0.694, 0.740, 0.751, 0.719, 0.743, 0.759, 0.721,
      0.750, 0.763, 0.715, 0.756, 0.775, 0.739, 0.764, 0.782, 0.753, 0.768, 0.790, 0.744,
      0.768, 0.803, 0.770, 0.759, 0.808, 0.777},
     2.2e-4, 1.9e-2, 1.6e-4, true},
};

// Agreement to the printed precision of a two-significant-digit p-value.
bool matches_printed(double ours, double printed) {
    const double unit = std::pow(10.0, std::floor(std::log10(printed)));
    return std::abs(ours - printed) <= 0.1 * unit + 1e-15;
}

}  // namespace

TEST_CASE("ranks average ties and put the best score first") {
    const auto t = make_table(2, {"a", "b", "c"}, {0.9, 0.5, 0.5, 0.1, 0.2, 0.3});
    const Matrix r = block_ranks(t);
    CHECK(r(0, 0) == 1.0);
    CHECK(r(0, 1) == 2.5);
    CHECK(r(0, 2) == 2.5);
    CHECK(r(1, 0) == 3.0);
    CHECK(r(1, 2) == 1.0);
}

TEST_CASE("friedman hand-evaluated and degenerate cases") {
    std::vector<double> v;
    for (int b = 0; b < 10; ++b) v.insert(v.end(), {0.9, 0.5 + 0.01 * b, 0.1});
    const auto strict = friedman(make_table(10, {"a", "b", "c"}, v));
    CHECK(strict.statistic == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(strict.degrees_of_freedom == 2);
    CHECK(strict.p_value == doctest::Approx(4.539992976248486e-05).epsilon(1e-9));
    CHECK(strict.mean_ranks == std::vector<double>{1.0, 2.0, 3.0});

    const auto same = friedman(make_table(3, {"a", "b"}, {1, 1, 2, 2, 3, 3}));
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);

    CHECK_THROWS_AS(friedman(make_table(1, {"a", "b"}, {1, 2})), InvalidInput);
    CHECK_THROWS_AS(friedman(make_table(3, {"a"}, {1, 2, 3})), InvalidInput);
    auto nan = make_table(2, {"a", "b"}, {1, 2, 3, 4});
    nan.scores(1, 1) = std::nan("");
    CHECK_THROWS_AS(friedman(nan), InvalidInput);
}

TEST_CASE("friedman matches an independent reference including ties") {
    const auto t = make_table(3, {"a", "b", "c", "d"},
                              {0.61, 0.72, 0.55, 0.68, 0.58, 0.74, 0.57, 0.70, 0.66, 0.65, 0.52, 0.71});
    const auto r = friedman(t);
    CHECK(r.statistic == doctest::Approx(6.6).epsilon(1e-12));
    CHECK(std::abs(r.p_value - 0.08580108740012288) < 1e-6);

    const auto tied = make_table(4, {"a", "b", "c", "d"},
                                 {-1, -2, -2, -3, -3, -1, -1, -2, -2, -2, -3, -1, -1, -3, -2, -2});
    const auto rt = friedman(tied);
    CHECK(rt.statistic == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(rt.p_value - 0.9188914116546769) < 1e-6);
}

TEST_CASE("chi-square and incomplete gamma tails") {
    struct Ref {
        double x, df, sf;
    };
    const Ref refs[] = {
        {0.5, 1, 0.47950012218695337},  {3.0, 2, 0.22313016014842982},
        {20.0, 2, 4.539992976248486e-05}, {7.8, 3, 0.050331097859853326},
        {50, 3, 7.989179244951495e-11}, {0.001, 5, 0.9999999983185123},
        {100, 10, 5.4497019829205215e-17}, {12.3, 9, 0.19692022639855333},
    };
    for (const auto& r : refs) {
        CAPTURE(r.x);
        CAPTURE(r.df);
        CHECK(std::abs(chi_square_sf(r.x, r.df) - r.sf) <= 1e-10 * std::max(r.sf, 1e-300) + 1e-15);
    }
    CHECK(regularized_gamma_p(0.5, 0.3) == doctest::Approx(0.5614219739190003).epsilon(1e-12));
    CHECK(regularized_gamma_q(2.5, 4.0) == doctest::Approx(0.1562356275777222).epsilon(1e-12));
    CHECK(regularized_gamma_p(10, 3) == doctest::Approx(0.0011024881301154815).epsilon(1e-10));
    CHECK(chi_square_sf(0.0, 3) == 1.0);
    CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("studentized range tail with infinite degrees of freedom") {
    struct Ref {
        double q;
        int k;
        double sf;
    };
    const Ref refs[] = {
        {0.5, 2, 0.7236736098317631},   {2.0, 3, 0.33349932504015},
        {3.314, 3, 0.05004414040611005}, {4.472135954999579, 3, 0.004463515591762057},
        {1.0, 4, 0.8943255121281808},   {3.633, 4, 0.0500149789953781},
        {6.0, 5, 0.00021424261433133918}, {2.5, 10, 0.7556974420786214},
    };
    for (const auto& r : refs) {
        CAPTURE(r.q);
        CAPTURE(r.k);
        CHECK(std::abs(studentized_range_sf(r.q, r.k) - r.sf) < 1e-6);
    }
    // Two normals: the range is |N(0, 2)|.
    CHECK(normal_range_sf(1.3, 2) == doctest::Approx(2.0 * (1.0 - normal_cdf(1.3 / std::sqrt(2.0)))));
    CHECK(studentized_range_sf(0.0, 3) == 1.0);
}

TEST_CASE("nemenyi statistics and symmetry") {
    std::vector<double> v;
    for (int b = 0; b < 10; ++b) v.insert(v.end(), {0.9, 0.5, 0.1});
    const auto n = nemenyi(make_table(10, {"a", "b", "c"}, v));
    CHECK(n.q(0, 2) == doctest::Approx(std::sqrt(20.0)).epsilon(1e-12));
    CHECK(n.q(0, 1) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
    CHECK(n.p_values(0, 2) < n.p_values(0, 1));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(n.p_values(i, i) == 1.0);
        for (std::size_t j = 0; j < 3; ++j) CHECK(n.p_values(i, j) == n.p_values(j, i));
    }

    // Columns a and b trade places, so their rank sums are equal.
    const auto even = nemenyi(make_table(4, {"a", "b", "c"},
                                         {0.9, 0.8, 0.1, 0.8, 0.9, 0.1, 0.9, 0.8, 0.1, 0.8, 0.9, 0.1}));
    CHECK(even.q(0, 1) == 0.0);
    CHECK(even.p_values(0, 1) >= 0.999);
}

TEST_CASE("rank statistics are invariant to monotone transforms and column order") {
    const auto t = make_table(5, {"a", "b", "c", "d"},
                              {0.3, 0.5, 0.2, 0.9, 0.4, 0.1, 0.7, 0.6, 0.8, 0.3, 0.2, 0.1,
                               0.5, 0.6, 0.7, 0.65, 0.2, 0.25, 0.3, 0.15});
    auto warped = t;
    for (double& s : warped.scores.values()) s = std::exp(3.0 * s) - 7.0;
    CHECK(friedman(warped).statistic == friedman(t).statistic);

    const std::size_t perm[] = {2, 0, 3, 1};
    ScoreTable p = t;
    for (std::size_t j = 0; j < 4; ++j) {
        p.methods[j] = t.methods[perm[j]];
        for (std::size_t b = 0; b < 5; ++b) p.scores(b, j) = t.scores(b, perm[j]);
    }
    const auto a = nemenyi(t), b = nemenyi(p);
    CHECK(friedman(p).statistic == doctest::Approx(friedman(t).statistic).epsilon(1e-14));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(b.p_values(i, j) == a.p_values(perm[i], perm[j]));
}

TEST_CASE("p-values fall as the statistic grows") {
    double last = 1.0;
    for (double x = 0.5; x < 40.0; x += 0.5) {
        const double p = chi_square_sf(x, 3);
        CHECK(p < last);
        last = p;
    }
    last = 1.0;
    for (double q = 0.25; q < 7.0; q += 0.25) {
        const double p = studentized_range_sf(q, 3);
        CHECK(p < last);
        last = p;
    }
}

TEST_CASE("reference score columns reproduce their printed p-values") {
    for (const auto& col : kReference) {
        CAPTURE(col.name);
        const auto t = make_table(10, {"psh", "ssb", "vdsh"}, col.scores);
        const auto f = friedman(t);
        const auto n = nemenyi(t);
        CHECK(matches_printed(f.p_value, col.friedman));
        CHECK(matches_printed(n.p_values(1, 0), col.vs_psh));
        if (col.check_vdsh) CHECK(matches_printed(n.p_values(1, 2), col.vs_vdsh));
    }
}

TEST_CASE("score table CSV round trip") {
    const auto t = make_table(3, {"ssb-vae", "psh-gs"}, {0.1, 0.2, 0.30000000000000004, 0.4, 0.5, 1e-9});
    std::stringstream s;
    write_score_table(s, t);
    const auto back = read_score_table(s);
    CHECK(back.methods == t.methods);
    CHECK(back.blocks == t.blocks);
    CHECK(back.scores == t.scores);
    std::istringstream bad("block,a,b\nx,1\n");
    CHECK_THROWS_AS(read_score_table(bad), InvalidInput);
}
