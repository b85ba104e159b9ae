#pragma once

// Friedman omnibus and Nemenyi post-hoc tests over method x block score tables.

#include <iosfwd>
#include <string>
#include <vector>

#include "sshash/matrix.hpp"

namespace sshash {

/// scores(b, j): score of method j in block b. Higher scores rank better.
struct ScoreTable {
    std::vector<std::string> methods;
    std::vector<std::string> blocks;
    Matrix scores;

    std::size_t num_methods() const noexcept { return methods.size(); }
    std::size_t num_blocks() const noexcept { return blocks.size(); }
    /// At least two methods and two blocks, matching shape, finite scores.
    void validate() const;
};

/// CSV: header "block,<method>,...", then one row per block.
void write_score_table(std::ostream& out, const ScoreTable& table);
ScoreTable read_score_table(std::istream& in);

/// Within-block ranks (1 = best score), ties given their average rank.
Matrix block_ranks(const ScoreTable& table);

struct FriedmanResult {
    double statistic = 0.0;
    int degrees_of_freedom = 0;
    double p_value = 1.0;
    std::vector<double> mean_ranks;
};

/// Tie-corrected Friedman chi-square; a table made only of ties gives
/// statistic 0 and p-value 1.
FriedmanResult friedman(const ScoreTable& table);

struct NemenyiResult {
    std::vector<double> mean_ranks;
    Matrix q;         // k x k, |mean rank difference| / sqrt(k(k+1) / (6 n))
    Matrix p_values;  // k x k, symmetric, unit diagonal
};

NemenyiResult nemenyi(const ScoreTable& table);

/// Regularized lower and upper incomplete gamma functions P(a, x), Q(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);
/// P(X > x) for X ~ chi-square(df).
double chi_square_sf(double x, double df);
double normal_cdf(double x) noexcept;
/// P(range of k iid standard normals > w).
double normal_range_sf(double w, int k);
/// Studentized range upper tail with infinite degrees of freedom.
double studentized_range_sf(double q, int k);

}  // namespace sshash
