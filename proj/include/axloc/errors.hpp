#ifndef AXLOC_ERRORS_HPP
#define AXLOC_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace axloc {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Unknown key in a lookup table (landmark ids, enum names).
class LookupError : public Error {
public:
    LookupError(std::string key, const std::string& what_table)
        : Error("unknown " + what_table + ": '" + key + "'"), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    IoError(std::string path, const std::string& detail)
        : Error(path + ": " + detail), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Malformed textual input; line is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    enum class Kind { missing_header, bad_field, duplicate_index, bad_json };

    ParseError(Kind kind, std::size_t line, const std::string& detail)
        : Error(format(kind, line, detail)), kind_(kind), line_(line) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }

private:
    static std::string format(Kind kind, std::size_t line, const std::string& detail);

    Kind kind_;
    std::size_t line_;
};

/// Structural problem in an AXV1 volume container.
class VolumeFormatError : public Error {
public:
    enum class Kind {
        bad_magic,
        truncated_header,
        bad_header,
        truncated_payload,
        dimension_mismatch,
        non_positive_spacing,
        invalid_dimension,
    };

    VolumeFormatError(Kind kind, std::string field, const std::string& detail)
        : Error(std::string(kind_name(kind)) + " (" + field + "): " + detail),
          kind_(kind), field_(std::move(field)) {}

    Kind kind() const noexcept { return kind_; }
    /// Header field (or payload region) the failure refers to.
    const std::string& field() const noexcept { return field_; }

    static const char* kind_name(Kind kind) noexcept;

private:
    Kind kind_;
    std::string field_;
};

/// A file-backed predictor was queried for an index it does not hold.
class MissingPredictionError : public Error {
public:
    explicit MissingPredictionError(std::size_t index)
        : Error("missing prediction for slice " + std::to_string(index)), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Fewer than two distinct slice indices were offered to the fitter.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// RANSAC found no candidate line with enough support.
class NoConsensusError : public Error {
public:
    NoConsensusError(std::size_t best_inliers, std::size_t required)
        : Error("no consensus: best candidate has " + std::to_string(best_inliers) +
                " inliers, " + std::to_string(required) + " required"),
          best_inliers_(best_inliers), required_(required) {}

    std::size_t best_inliers() const noexcept { return best_inliers_; }
    std::size_t required() const noexcept { return required_; }

private:
    std::size_t best_inliers_;
    std::size_t required_;
};

/// A mapping with zero slope cannot be inverted.
class DegenerateMappingError : public Error {
public:
    using Error::Error;
};

} // namespace axloc

#endif
