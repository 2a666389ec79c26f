#pragma once

#include <stdexcept>
#include <string>

namespace rba {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Zero variance in a delta vector. By the time deltas reach the t-test they
// come from distinct document pairs, so a constant vector means a provider
// or cache returned the same score everywhere.
struct DegenerateVariance : Error {
    using Error::Error;
};

// Remote call failed in a way that a retry might fix.
struct RetryableError : Error {
    using Error::Error;
};

// Enhancement failed for one query; carries the query so callers can report
// which pair is affected.
struct EnhanceError : Error {
    EnhanceError(const std::string& msg, std::string query, bool retryable)
        : Error(msg), query(std::move(query)), retryable(retryable) {}
    std::string query;
    bool retryable = false;
};

}  // namespace rba
