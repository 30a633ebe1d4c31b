#pragma once

#include <stdexcept>
#include <string>

namespace dbnlc {

/// Invalid user input: config files, schemas, CLI arguments. Exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Failure inside a pipeline stage, tagged with the stage name. Exit code 2.
class StageError : public std::runtime_error {
public:
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

} // namespace dbnlc
