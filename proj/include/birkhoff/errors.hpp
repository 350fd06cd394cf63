#ifndef BIRKHOFF_ERRORS_HPP
#define BIRKHOFF_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace birkhoff {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorCategory { usage = 1, data = 2, numerical = 3 };

// All library errors carry a stable short code (e.g. "MissingClass") that
// callers and tests can match on without parsing the human-readable text.
class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string_view code, const std::string& message)
        : std::runtime_error(std::string(code) + ": " + message),
          category_(category),
          code_(code) {}

    ErrorCategory category() const noexcept { return category_; }
    const std::string& code() const noexcept { return code_; }

    static Error usage(std::string_view code, const std::string& message) {
        return Error(ErrorCategory::usage, code, message);
    }
    static Error data(std::string_view code, const std::string& message) {
        return Error(ErrorCategory::data, code, message);
    }
    static Error numerical(std::string_view code, const std::string& message) {
        return Error(ErrorCategory::numerical, code, message);
    }

private:
    ErrorCategory category_;
    std::string code_;
};

} // namespace birkhoff

#endif
