#ifndef ICBPL_METRICS_HPP
#define ICBPL_METRICS_HPP

#include <span>
#include <vector>

#include "icbpl/types.hpp"

namespace icbpl {

/// Predicted cluster ids and ground-truth class ids for the same samples.
struct LabelPair {
    std::span<const int> predicted;
    std::span<const int> truth;

    /// Equal, non-zero lengths and non-negative labels, else kInvalidArgument.
    void validate() const;
};

/// Minimum-cost perfect assignment on a square matrix: result[row] = column.
/// Among equal-cost optima the lexicographically smallest permutation wins.
std::vector<int> hungarian(const Matrix& cost);

/// Total cost of `assignment` under `cost`.
double assignment_cost(const Matrix& cost, std::span<const int> assignment);

/// K x K contingency counts, counts(p, t) = #{i : predicted_i = p, truth_i = t}.
Matrix contingency(const LabelPair& pair, int num_clusters);

/// Fraction of samples matched after the best one-to-one relabeling of the
/// predicted clusters. Labels must be < num_clusters.
double cluster_accuracy(const LabelPair& pair, int num_clusters);

/// I(P;T) / ((H(P) + H(T)) / 2), natural logs. Two single-cluster
/// partitions score 1.
double nmi(const LabelPair& pair);

}  // namespace icbpl

#endif  // ICBPL_METRICS_HPP
