#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsxai {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or parameter dimensions disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Argument outside its valid domain (class index, k, config value, ...).
class ValueError : public Error {
public:
    using Error::Error;
};

/// Operation invoked in the wrong order, e.g. backward without a cached forward.
class StateError : public Error {
public:
    using Error::Error;
};

/// Training diverged (non-finite loss).
class TrainingError : public Error {
public:
    TrainingError(const std::string& what, std::size_t epoch, std::size_t batch)
        : Error(what), epoch_(epoch), batch_(batch) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

/// Malformed input file. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace tsxai
