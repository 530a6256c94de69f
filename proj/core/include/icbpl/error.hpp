#ifndef ICBPL_ERROR_HPP
#define ICBPL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace icbpl {

enum class ErrorCode {
    kInvalidArgument,
    kInfeasibleGeometry,
    kDegenerateBandwidth,
    kInvalidState,
    kNonFinite,
    kCorruptFile,
    kEmptyDataset,
    kIoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace icbpl

#endif  // ICBPL_ERROR_HPP
