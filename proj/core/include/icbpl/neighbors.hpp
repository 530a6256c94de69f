#ifndef ICBPL_NEIGHBORS_HPP
#define ICBPL_NEIGHBORS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "icbpl/types.hpp"

namespace icbpl {

inline constexpr int kDefaultNeighborCount = 4;
inline constexpr int kDefaultRefreshPeriod = 30;

/// Per-sample nearest neighbors, self excluded, most similar first.
class NeighborTable {
public:
    NeighborTable(std::vector<std::int32_t> indices, Index rows, Index neighbor_count, Metric metric,
                  int built_at_epoch);

    Index rows() const noexcept { return rows_; }
    Index neighbor_count() const noexcept { return neighbor_count_; }
    Metric metric() const noexcept { return metric_; }
    int built_at_epoch() const noexcept { return built_at_epoch_; }

    std::span<const std::int32_t> row(Index i) const {
        return {indices_.data() + i * neighbor_count_, static_cast<std::size_t>(neighbor_count_)};
    }
    const std::vector<std::int32_t>& indices() const noexcept { return indices_; }

private:
    std::vector<std::int32_t> indices_;
    Index rows_;
    Index neighbor_count_;
    Metric metric_;
    int built_at_epoch_;
};

/// Exact search. Cosine ranks by dot product (rows are expected to be unit
/// norm), Euclidean by squared distance; ties go to the lower index.
/// Requires rows > m >= 1.
NeighborTable build_neighbors(const Matrix& features, int m, Metric metric = Metric::kCosine,
                              int built_at_epoch = 0);

/// True when the table should be rebuilt at the start of `epoch`.
bool refresh_due(int epoch, int period = kDefaultRefreshPeriod);

}  // namespace icbpl

#endif  // ICBPL_NEIGHBORS_HPP
