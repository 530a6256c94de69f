#include "icbpl/neighbors.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "icbpl/error.hpp"

namespace icbpl {

namespace {

constexpr Index kQueryBlock = 256;

}  // namespace

NeighborTable::NeighborTable(std::vector<std::int32_t> indices, Index rows, Index neighbor_count, Metric metric,
                             int built_at_epoch)
    : indices_(std::move(indices)),
      rows_(rows),
      neighbor_count_(neighbor_count),
      metric_(metric),
      built_at_epoch_(built_at_epoch) {
    require(neighbor_count_ >= 1, ErrorCode::kInvalidArgument, "neighbor tables need at least one neighbor per row");
    require(static_cast<Index>(indices_.size()) == rows_ * neighbor_count_, ErrorCode::kInvalidArgument,
            "neighbor index buffer does not match rows * neighbor_count");
    for (Index i = 0; i < rows_; ++i)
        for (std::int32_t j : row(i))
            require(j >= 0 && j < rows_ && j != i, ErrorCode::kInvalidArgument,
                    "row " + std::to_string(i) + " holds an invalid neighbor index " + std::to_string(j));
}

NeighborTable build_neighbors(const Matrix& features, int m, Metric metric, int built_at_epoch) {
    const Index n = features.rows();
    require(m >= 1, ErrorCode::kInvalidArgument, "neighbor count must be at least 1");
    require(n > m, ErrorCode::kInvalidArgument,
            "need more than " + std::to_string(m) + " samples to find " + std::to_string(m) + " neighbors, got " +
                std::to_string(n));
    require(features.allFinite(), ErrorCode::kInvalidArgument, "features contain non-finite values");

    std::vector<std::int32_t> indices(static_cast<std::size_t>(n * m));
    // (score, index); higher score is closer.
    std::vector<std::pair<double, std::int32_t>> candidates(static_cast<std::size_t>(n));
    const auto closer = [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    };

    for (Index start = 0; start < n; start += kQueryBlock) {
        const Index block = std::min(kQueryBlock, n - start);
        Matrix scores;
        if (metric == Metric::kCosine) {
            scores = features.middleRows(start, block) * features.transpose();
        } else {
            scores.resize(block, n);
            for (Index q = 0; q < block; ++q)
                scores.row(q) = -(features.rowwise() - features.row(start + q)).rowwise().squaredNorm().transpose();
        }
        for (Index q = 0; q < block; ++q) {
            const Index query = start + q;
            std::size_t count = 0;
            for (Index j = 0; j < n; ++j)
                if (j != query) candidates[count++] = {scores(q, j), static_cast<std::int32_t>(j)};
            std::partial_sort(candidates.begin(), candidates.begin() + m,
                              candidates.begin() + static_cast<std::ptrdiff_t>(count), closer);
            for (int k = 0; k < m; ++k) indices[static_cast<std::size_t>(query * m + k)] = candidates[k].second;
        }
    }
    return NeighborTable(std::move(indices), n, m, metric, built_at_epoch);
}

bool refresh_due(int epoch, int period) {
    require(period >= 1, ErrorCode::kInvalidArgument, "refresh period must be positive");
    require(epoch >= 0, ErrorCode::kInvalidArgument, "epoch must be non-negative");
    return epoch % period == 0;
}

}  // namespace icbpl
