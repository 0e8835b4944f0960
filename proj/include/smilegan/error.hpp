#pragma once

#include <stdexcept>
#include <string>

namespace smilegan {

enum class ErrorCode {
    NotSymmetric,
    NotPSD,
    RankDeficient,
    TooFewSamples,
    ShapeMismatch,
    GraphNotRetained,
    EmptyDataset,
    NonFiniteLoss,
    IoError,
    FormatVersionMismatch,
    ChecksumMismatch,
    DimensionMismatch,
    KindMismatch,
    LengthMismatch,
    TooManyClusters,
    InsufficientData,
    ArchMismatch,
    SpecInvalid,
    InsufficientCN,
    MissingCovariates,
    ParseError,
    SchemaError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// Parse failures carry the 1-based file line and column of the offending cell.
class ParseError : public Error {
public:
    ParseError(long line, long column, const std::string& message)
        : Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
          line_(line), column_(column) {}

    long line() const { return line_; }
    long column() const { return column_; }

private:
    long line_;
    long column_;
};

// Schema violations name the offending column.
class SchemaError : public Error {
public:
    SchemaError(const std::string& column_name, const std::string& message)
        : Error(ErrorCode::SchemaError, "'" + column_name + "': " + message), name_(column_name) {}

    const std::string& column_name() const { return name_; }

private:
    std::string name_;
};

}  // namespace smilegan
