#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kpa {

/// Base of every error the library raises. The category picks the CLI exit
/// code and the HTTP status class in the service.
class Error : public std::runtime_error {
public:
    enum class Kind { Usage, Config, Data, Scorer, NotFound, Conflict };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(Kind::Config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(Kind::Data, what) {}
};

class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string& what) : Error(Kind::NotFound, what) {}
};

class ConflictError : public Error {
public:
    explicit ConflictError(const std::string& what) : Error(Kind::Conflict, what) {}
};

/// Failure while obtaining scores. `index` is the position of the failing
/// pair inside the batch that was being scored, when known.
class ScorerError : public Error {
public:
    enum class Reason { Lookup, Transport, Protocol };

    ScorerError(Reason reason, const std::string& what, std::ptrdiff_t index = -1)
        : Error(Kind::Scorer, what), reason_(reason), index_(index) {}

    Reason reason() const noexcept { return reason_; }
    std::ptrdiff_t index() const noexcept { return index_; }

private:
    Reason reason_;
    std::ptrdiff_t index_;
};

}  // namespace kpa
