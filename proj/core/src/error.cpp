#include "icbpl/error.hpp"

namespace icbpl {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "invalid-argument";
        case ErrorCode::kInfeasibleGeometry: return "infeasible-geometry";
        case ErrorCode::kDegenerateBandwidth: return "degenerate-bandwidth";
        case ErrorCode::kInvalidState: return "invalid-state";
        case ErrorCode::kNonFinite: return "non-finite";
        case ErrorCode::kCorruptFile: return "corrupt-file";
        case ErrorCode::kEmptyDataset: return "empty-dataset";
        case ErrorCode::kIoError: return "io-error";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace icbpl
