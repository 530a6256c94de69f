#include "icbpl/dataset.hpp"

#include <string>

#include "icbpl/error.hpp"

namespace icbpl {

namespace {

Matrix gather_rows(const FloatMatrix& source, const std::vector<Index>& indices) {
    Matrix out(static_cast<Index>(indices.size()), source.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        require(indices[r] >= 0 && indices[r] < source.rows(), ErrorCode::kInvalidArgument,
                "sample index " + std::to_string(indices[r]) + " out of range");
        out.row(static_cast<Index>(r)) = source.row(indices[r]).cast<double>();
    }
    return out;
}

}  // namespace

void EmbeddingDataset::validate() const {
    if (data.rows() == 0) fail(ErrorCode::kEmptyDataset, "dataset has no samples");
    require(data.cols() >= 1, ErrorCode::kInvalidArgument, "embeddings need a positive dimension");
    require(data.allFinite(), ErrorCode::kInvalidArgument, "embeddings contain non-finite values");
    for (std::size_t v = 0; v < views.size(); ++v) {
        require(views[v].rows() == data.rows() && views[v].cols() == data.cols(), ErrorCode::kInvalidArgument,
                "view " + std::to_string(v) + " is " + std::to_string(views[v].rows()) + "x" +
                    std::to_string(views[v].cols()) + ", originals are " + std::to_string(data.rows()) + "x" +
                    std::to_string(data.cols()));
        require(views[v].allFinite(), ErrorCode::kInvalidArgument,
                "view " + std::to_string(v) + " contains non-finite values");
    }
    if (labels) {
        require(static_cast<Index>(labels->size()) == data.rows(), ErrorCode::kInvalidArgument,
                "label count " + std::to_string(labels->size()) + " does not match " + std::to_string(data.rows()) +
                    " samples");
        for (int label : *labels) require(label >= 0, ErrorCode::kInvalidArgument, "labels must be non-negative");
    }
}

Matrix EmbeddingDataset::gather(const std::vector<Index>& indices) const { return gather_rows(data, indices); }

Matrix EmbeddingDataset::gather_view(Index view, const std::vector<Index>& indices) const {
    require(view >= 0 && view < num_views(), ErrorCode::kInvalidArgument, "view index out of range");
    return gather_rows(views[static_cast<std::size_t>(view)], indices);
}

}  // namespace icbpl
