#pragma once

#include <stdexcept>
#include <string>

namespace hashalloc {

/// Coarse failure class, used by the CLI to choose an exit code:
/// Validation -> 2, Insufficiency -> 3, anything else -> 4.
enum class ErrorKind { Validation, Insufficiency, Internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// --- portfolio ---------------------------------------------------------
struct InfeasibleRisk : Error {
    explicit InfeasibleRisk(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct SingularVolatility : Error {
    explicit SingularVolatility(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct NonFiniteInput : Error {
    explicit NonFiniteInput(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& m) : Error(ErrorKind::Validation, m) {}
};

// --- market data -------------------------------------------------------
struct ParseError : Error {
    explicit ParseError(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct NonPositivePrice : Error {
    explicit NonPositivePrice(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct UnsortedTimestamps : Error {
    explicit UnsortedTimestamps(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct UnknownChain : Error {
    explicit UnknownChain(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct DuplicateBlock : Error {
    explicit DuplicateBlock(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct NonPositiveInput : Error {
    explicit NonPositiveInput(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct MissingDifficulty : Error {
    explicit MissingDifficulty(const std::string& m) : Error(ErrorKind::Insufficiency, m) {}
};
struct InsufficientHistory : Error {
    explicit InsufficientHistory(const std::string& m) : Error(ErrorKind::Insufficiency, m) {}
};

// --- risk inference ----------------------------------------------------
struct UnknownMiner : Error {
    explicit UnknownMiner(const std::string& m) : Error(ErrorKind::Insufficiency, m) {}
};
struct EmptyInput : Error {
    explicit EmptyInput(const std::string& m) : Error(ErrorKind::Validation, m) {}
};

// --- aggregate ---------------------------------------------------------
struct ZeroTotalWeight : Error {
    explicit ZeroTotalWeight(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct DegenerateVariance : Error {
    explicit DegenerateVariance(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct ZeroAllocationAfter : Error {
    explicit ZeroAllocationAfter(const std::string& m) : Error(ErrorKind::Validation, m) {}
};

// --- simulation / cli --------------------------------------------------
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::Validation, m) {}
};

} // namespace hashalloc
