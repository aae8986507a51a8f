#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgqa {

/// Base class for every error this library raises on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed S-expression text. `offset` is the byte position of the defect.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset(offset) {}
    std::size_t offset;
};

/// Ill-typed expression. `path` is a dotted child-index trail from the root,
/// e.g. "1.0" for root.args[1].args[0].
class TypeError : public Error {
public:
    TypeError(const std::string& what, std::string path)
        : Error(what + " (at node " + (path.empty() ? std::string("root") : path) + ")"),
          path(std::move(path)) {}
    std::string path;
};

/// Bad input file (triples, labels, dialogs, memory). 1-based line number.
class LoadError : public Error {
public:
    LoadError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line(line) {}
    std::size_t line;
};

/// Evaluation of a structurally valid expression failed (unresolved leaf,
/// grouped aggregation over a non-core argument, ...).
class EvalError : public Error {
public:
    using Error::Error;
};

/// Expression falls outside the supported SPARQL subset, or subset text
/// fails to parse.
class SparqlError : public Error {
public:
    using Error::Error;
};

/// Entity/relation linking could not produce candidates.
class LinkError : public Error {
public:
    using Error::Error;
};

/// Core calibration gave up (unrepairable draft).
class CalibrationError : public Error {
public:
    CalibrationError(const std::string& what, std::string repair_log)
        : Error(what), repair_log(std::move(repair_log)) {}
    std::string repair_log;
};

/// Gateway transport or response-contract failure.
class GatewayError : public Error {
public:
    using Error::Error;
};

/// Replacement plan does not fit the chosen template.
class PlanError : public Error {
public:
    using Error::Error;
};

} // namespace kgqa
