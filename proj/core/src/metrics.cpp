#include "icbpl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "icbpl/error.hpp"

namespace icbpl {

namespace {

// Shortest augmenting path Hungarian with row/column potentials, O(n^3).
// rows[] gives the rows of `cost` to use and cols[] candidate columns; both
// of equal size.
double solve_min_cost(const Matrix& cost, const std::vector<int>& rows, const std::vector<int>& cols,
                      std::vector<int>* assignment) {
    const std::size_t n = rows.size();
    if (n == 0) return 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_to(n + 1);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);  // match[col] = row, 1-based
    std::vector<char> used(n + 1);

    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t col0 = 0;
        std::fill(min_to.begin(), min_to.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[col0] = 1;
            const std::size_t row = match[col0];
            double delta = inf;
            std::size_t col1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double reduced = cost(rows[row - 1], cols[j - 1]) - u[row] - v[j];
                if (reduced < min_to[j]) {
                    min_to[j] = reduced;
                    way[j] = col0;
                }
                if (min_to[j] < delta) {
                    delta = min_to[j];
                    col1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            col0 = col1;
        } while (match[col0] != 0);
        do {
            const std::size_t col1 = way[col0];
            match[col0] = match[col1];
            col0 = col1;
        } while (col0 != 0);
    }

    double total = 0.0;
    std::vector<int> result(n);
    for (std::size_t j = 1; j <= n; ++j) {
        result[match[j] - 1] = static_cast<int>(j - 1);
        total += cost(rows[match[j] - 1], cols[j - 1]);
    }
    if (assignment) *assignment = std::move(result);
    return total;
}

double entropy(const std::map<int, double>& counts, double n) {
    double h = 0.0;
    for (const auto& [label, count] : counts) {
        (void)label;
        if (count > 0.0) h -= (count / n) * std::log(count / n);
    }
    return h;
}

}  // namespace

void LabelPair::validate() const {
    require(!predicted.empty(), ErrorCode::kInvalidArgument, "label arrays are empty");
    require(predicted.size() == truth.size(), ErrorCode::kInvalidArgument,
            "predicted and true label arrays differ in length");
    for (std::size_t i = 0; i < predicted.size(); ++i)
        require(predicted[i] >= 0 && truth[i] >= 0, ErrorCode::kInvalidArgument,
                "labels must be non-negative (sample " + std::to_string(i) + ")");
}

std::vector<int> hungarian(const Matrix& cost) {
    require(cost.rows() == cost.cols(), ErrorCode::kInvalidArgument,
            "assignment cost matrix must be square, got " + std::to_string(cost.rows()) + "x" +
                std::to_string(cost.cols()));
    require(cost.allFinite(), ErrorCode::kInvalidArgument, "assignment costs must be finite");
    const int n = static_cast<int>(cost.rows());
    if (n == 0) return {};

    std::vector<int> rows(n), cols(n);
    for (int i = 0; i < n; ++i) rows[i] = cols[i] = i;
    const double optimum = solve_min_cost(cost, rows, cols, nullptr);
    const double tolerance = 1e-9 * std::max(1.0, cost.cwiseAbs().maxCoeff() * n);

    // Fix rows in order to the smallest column that still admits an optimum.
    std::vector<int> result(n);
    double fixed_cost = 0.0;
    std::vector<int> free_rows(rows.begin() + 1, rows.end());
    for (int r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < cols.size(); ++k) {
            std::vector<int> rest_cols = cols;
            rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(k));
            const double candidate = fixed_cost + cost(r, cols[k]) + solve_min_cost(cost, free_rows, rest_cols, nullptr);
            if (candidate <= optimum + tolerance || k + 1 == cols.size()) {
                result[r] = cols[k];
                fixed_cost += cost(r, cols[k]);
                cols = std::move(rest_cols);
                break;
            }
        }
        if (!free_rows.empty()) free_rows.erase(free_rows.begin());
    }
    return result;
}

double assignment_cost(const Matrix& cost, std::span<const int> assignment) {
    require(static_cast<Index>(assignment.size()) == cost.rows(), ErrorCode::kInvalidArgument,
            "assignment length does not match the cost matrix");
    double total = 0.0;
    for (std::size_t r = 0; r < assignment.size(); ++r) total += cost(static_cast<Index>(r), assignment[r]);
    return total;
}

Matrix contingency(const LabelPair& pair, int num_clusters) {
    pair.validate();
    require(num_clusters >= 1, ErrorCode::kInvalidArgument, "number of clusters must be positive");
    Matrix counts = Matrix::Zero(num_clusters, num_clusters);
    for (std::size_t i = 0; i < pair.predicted.size(); ++i) {
        require(pair.predicted[i] < num_clusters && pair.truth[i] < num_clusters, ErrorCode::kInvalidArgument,
                "label out of range [0, " + std::to_string(num_clusters) + ") at sample " + std::to_string(i));
        counts(pair.predicted[i], pair.truth[i]) += 1.0;
    }
    return counts;
}

double cluster_accuracy(const LabelPair& pair, int num_clusters) {
    const Matrix counts = contingency(pair, num_clusters);
    const std::vector<int> mapping = hungarian(-counts);
    double matched = 0.0;
    for (int p = 0; p < num_clusters; ++p) matched += counts(p, mapping[p]);
    return matched / static_cast<double>(pair.predicted.size());
}

double nmi(const LabelPair& pair) {
    pair.validate();
    const double n = static_cast<double>(pair.predicted.size());
    std::map<int, double> pred_counts, truth_counts;
    std::map<std::pair<int, int>, double> joint;
    for (std::size_t i = 0; i < pair.predicted.size(); ++i) {
        pred_counts[pair.predicted[i]] += 1.0;
        truth_counts[pair.truth[i]] += 1.0;
        joint[{pair.predicted[i], pair.truth[i]}] += 1.0;
    }
    const double h_pred = entropy(pred_counts, n);
    const double h_truth = entropy(truth_counts, n);
    if (h_pred == 0.0 && h_truth == 0.0) return 1.0;

    double mutual = 0.0;
    for (const auto& [labels, count] : joint) {
        const double p_joint = count / n;
        mutual += p_joint * std::log(count * n / (pred_counts[labels.first] * truth_counts[labels.second]));
    }
    // Tiny negative residue from rounding when the partitions are independent.
    return std::clamp(mutual / (0.5 * (h_pred + h_truth)), 0.0, 1.0);
}

}  // namespace icbpl
