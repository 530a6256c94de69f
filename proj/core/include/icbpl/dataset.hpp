#ifndef ICBPL_DATASET_HPP
#define ICBPL_DATASET_HPP

#include <optional>
#include <string>
#include <vector>

#include "icbpl/types.hpp"

namespace icbpl {

/// Precomputed input embeddings. `views[v]` is the v-th augmented copy of
/// every sample, row-aligned with `data`. Labels are for evaluation only.
struct EmbeddingDataset {
    FloatMatrix data;
    std::vector<FloatMatrix> views;
    std::optional<std::vector<int>> labels;
    std::string provenance;

    Index size() const noexcept { return data.rows(); }
    Index dim() const noexcept { return data.cols(); }
    Index num_views() const noexcept { return static_cast<Index>(views.size()); }

    /// kEmptyDataset for N = 0; kInvalidArgument for shape or label-length
    /// mismatches or non-finite values.
    void validate() const;

    /// Rows `indices` of the originals (or of view `view`) as doubles.
    Matrix gather(const std::vector<Index>& indices) const;
    Matrix gather_view(Index view, const std::vector<Index>& indices) const;

    Matrix data_as_double() const { return data.cast<double>(); }
};

}  // namespace icbpl

#endif  // ICBPL_DATASET_HPP
