#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adgen {

/// Base of every error raised by adgen. `kind()` is a stable identifier used
/// in diagnostics, record status strings and HTTP error bodies.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message);
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define ADGEN_DECLARE_ERROR(Name)                                  \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& message)                  \
            : Error(#Name, message) {}                             \
    }

ADGEN_DECLARE_ERROR(InvalidArgument);
ADGEN_DECLARE_ERROR(IoError);
ADGEN_DECLARE_ERROR(ImageDecodeError);
ADGEN_DECLARE_ERROR(BackendUnavailable);
ADGEN_DECLARE_ERROR(BackendProtocolViolation);
ADGEN_DECLARE_ERROR(MockRuleMissing);
ADGEN_DECLARE_ERROR(ProfileRejected);
ADGEN_DECLARE_ERROR(TooFewFloorPixels);
ADGEN_DECLARE_ERROR(DegenerateGeometry);
ADGEN_DECLARE_ERROR(NoCompatiblePairs);
ADGEN_DECLARE_ERROR(LayoutParseError);
ADGEN_DECLARE_ERROR(EmptyForeground);
ADGEN_DECLARE_ERROR(UnknownCategory);
ADGEN_DECLARE_ERROR(InvalidSpec);
ADGEN_DECLARE_ERROR(UnknownBatch);
ADGEN_DECLARE_ERROR(UnknownGeneration);
ADGEN_DECLARE_ERROR(UnknownCollection);
ADGEN_DECLARE_ERROR(BatchConflict);
ADGEN_DECLARE_ERROR(StageTimeout);

#undef ADGEN_DECLARE_ERROR

/// Model output that could not be interpreted. The raw text is kept so it can
/// be logged next to the failing record.
class UnparseableModelOutput : public Error {
public:
    UnparseableModelOutput(const std::string& message, std::string raw)
        : Error("UnparseableModelOutput", message), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

/// A judge answered with well-formed JSON that breaks the scoring protocol
/// (missing, non-integer or out-of-range score).
class JudgeProtocolViolation : public Error {
public:
    JudgeProtocolViolation(const std::string& message, std::string raw)
        : Error("JudgeProtocolViolation", message), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

}  // namespace adgen
