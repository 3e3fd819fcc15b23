#pragma once

#include <stdexcept>
#include <string>

namespace aee {

enum class ErrorCategory {
    dimension,
    parameter,
    state,
    data,
    numerical,
    diverged,
    version,
    parse,
    io,
    missing_artifact,
};

const char* to_string(ErrorCategory category);

/// Base class for every error raised by the library. The category drives
/// the CLI exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define AEE_DEFINE_ERROR(Name, Cat)                                           \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(ErrorCategory::Cat, what) {} \
    };

AEE_DEFINE_ERROR(DimensionError, dimension)
AEE_DEFINE_ERROR(ParameterError, parameter)
AEE_DEFINE_ERROR(StateError, state)
AEE_DEFINE_ERROR(DataError, data)
AEE_DEFINE_ERROR(NumericalError, numerical)
AEE_DEFINE_ERROR(VersionError, version)
AEE_DEFINE_ERROR(ParseError, parse)
AEE_DEFINE_ERROR(IoError, io)

#undef AEE_DEFINE_ERROR

class TrainingDiverged : public Error {
public:
    TrainingDiverged(int epoch, const std::string& what)
        : Error(ErrorCategory::diverged, what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

/// Raised by pipeline commands whose inputs have not been produced yet.
class MissingArtifact : public Error {
public:
    MissingArtifact(std::string artifact, std::string producer)
        : Error(ErrorCategory::missing_artifact,
                "missing artifact '" + artifact + "'; run '" + producer + "' first"),
          artifact_(std::move(artifact)),
          producer_(std::move(producer)) {}

    const std::string& artifact() const noexcept { return artifact_; }
    const std::string& producer() const noexcept { return producer_; }

private:
    std::string artifact_;
    std::string producer_;
};

}  // namespace aee
