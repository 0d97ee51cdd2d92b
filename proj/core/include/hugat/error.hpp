#pragma once

#include <stdexcept>
#include <string>

namespace hugat {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& msg) : Error("shape mismatch: " + msg) {}
};
struct NonFiniteValue : Error {
    explicit NonFiniteValue(const std::string& msg) : Error("non-finite value: " + msg) {}
};
struct NotScalar : Error {
    explicit NotScalar(const std::string& msg) : Error("not a scalar: " + msg) {}
};
struct InvalidFraction : Error {
    explicit InvalidFraction(const std::string& msg) : Error("invalid fraction: " + msg) {}
};
struct UnknownRegion : Error {
    explicit UnknownRegion(const std::string& msg) : Error("unknown region: " + msg) {}
};
struct MalformedTimestamp : Error {
    explicit MalformedTimestamp(const std::string& msg) : Error("malformed timestamp: " + msg) {}
};
struct EmptyEventTable : Error {
    explicit EmptyEventTable(const std::string& msg) : Error("empty event table: " + msg) {}
};
struct SchemaMismatch : Error {
    explicit SchemaMismatch(const std::string& msg) : Error("schema mismatch: " + msg) {}
};
struct NegativeCount : Error {
    explicit NegativeCount(const std::string& msg) : Error("negative count: " + msg) {}
};
struct DivergenceDetected : Error {
    explicit DivergenceDetected(const std::string& msg) : Error("training diverged: " + msg) {}
};
struct DegenerateTarget : Error {
    explicit DegenerateTarget(const std::string& msg) : Error("degenerate target: " + msg) {}
};
struct KTooLarge : Error {
    explicit KTooLarge(const std::string& msg) : Error("k too large: " + msg) {}
};
struct MissingDistance : Error {
    explicit MissingDistance(const std::string& msg) : Error("missing distance: " + msg) {}
};
struct SchemaViolation : Error {
    SchemaViolation(const std::string& msg, long line)
        : Error("schema violation at line " + std::to_string(line) + ": " + msg), line(line) {}
    long line;
};
struct MissingFile : Error {
    explicit MissingFile(const std::string& path) : Error("missing file: " + path) {}
};
struct InvalidSpec : Error {
    explicit InvalidSpec(const std::string& msg) : Error("invalid spec: " + msg) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

}  // namespace hugat
