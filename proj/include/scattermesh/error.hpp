#pragma once

#include <stdexcept>
#include <string>

namespace scattermesh {

// Bad input data or parameters that make a stage impossible to run.
// The CLI maps this family to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IngestError : public DataError {
public:
    using DataError::DataError;
};

// Raised by pipeline orchestration; carries the stage that failed.
class StageError : public DataError {
public:
    StageError(std::string stage, const std::string& what)
        : DataError(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace scattermesh
