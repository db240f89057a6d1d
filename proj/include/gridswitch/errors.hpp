#pragma once

#include <stdexcept>
#include <string>

namespace gridswitch {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- case file ingestion ---

class MalformedCase : public Error {
public:
    MalformedCase(int line, const std::string& reason)
        : Error("malformed case (line " + std::to_string(line) + "): " + reason),
          line(line), reason(reason) {}
    int line;
    std::string reason;
};

class MissingSection : public Error {
public:
    explicit MissingSection(const std::string& name)
        : Error("missing case section: " + name), name(name) {}
    std::string name;
};

class DuplicateBusId : public Error {
public:
    explicit DuplicateBusId(int id)
        : Error("duplicate bus id: " + std::to_string(id)), id(id) {}
    int id;
};

class InvalidCase : public Error {
public:
    explicit InvalidCase(const std::string& what) : Error(what) {}
};

// --- power flow ---

class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

class IslandedInput : public Error {
public:
    explicit IslandedInput(const std::string& what) : Error(what) {}
};

// --- environment ---

class InfeasibleBaseCase : public Error {
public:
    explicit InfeasibleBaseCase(const std::string& what) : Error(what) {}
};

class EpisodeFinished : public Error {
public:
    EpisodeFinished() : Error("step() called on a finished episode") {}
};

class ActionOutOfRange : public Error {
public:
    ActionOutOfRange(int action, int size)
        : Error("action " + std::to_string(action) + " outside [0, " +
                std::to_string(size) + ")"),
          action(action), size(size) {}
    int action;
    int size;
};

// --- neural nets / agents ---

class ShapeMismatch : public Error {
public:
    explicit ShapeMismatch(const std::string& what) : Error(what) {}
};

class StaleCache : public Error {
public:
    explicit StaleCache(const std::string& what) : Error(what) {}
};

class InvalidDim : public Error {
public:
    explicit InvalidDim(const std::string& what) : Error(what) {}
};

// --- harness ---

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

class CaseLoadError : public Error {
public:
    explicit CaseLoadError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

class CheckpointMismatch : public Error {
public:
    explicit CheckpointMismatch(const std::string& what) : Error(what) {}
};

} // namespace gridswitch
