#pragma once

#include <stdexcept>
#include <string>

namespace naenc {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor shapes disagree; message names both shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

// An id or position is out of range for its table.
class IndexError : public Error {
public:
    using Error::Error;
};

// A sequence is too long or empty where that is illegal.
class LengthError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// A masking plan does not fit the sequence it is applied to.
class PlanError : public Error {
public:
    using Error::Error;
};

// Training-step failure (non-finite gradient, diverged loss).
class TrainError : public Error {
public:
    using Error::Error;
};

class EvalError : public Error {
public:
    using Error::Error;
};

// Malformed input file (dataset, vocabulary, checkpoint).
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace naenc
