#pragma once

#include <string>
#include <vector>

// Shared helpers for the plain-text interchange formats (model files,
// decoder files, CSV reports).  All floating-point output uses %.17g so
// every finite double round-trips bit-exactly.

namespace afs::text {

// %.17g rendering (nan/inf render as "nan"/"inf").
std::string fmt17(double v);

// Strict double parse: whole string must be consumed.  Throws
// afs::InvalidArgument otherwise or when require_finite and the value is
// not finite.
double parse_double(const std::string& s, bool require_finite = true);

// Strict parse of a non-negative integer.
std::size_t parse_size(const std::string& s);

// Splits on a single-character delimiter; keeps empty fields.
std::vector<std::string> split(const std::string& s, char delim);

// Splits on runs of spaces/tabs; never yields empty tokens.
std::vector<std::string> split_ws(const std::string& s);

// For a token of the form "<key>=<value>", verifies the key and returns the
// value.  Throws afs::InvalidArgument on mismatch.
std::string expect_kv(const std::string& token, const std::string& key);

// Comma-separated doubles, strict.
std::vector<double> parse_double_list(const std::string& s,
                                      bool require_finite = true);

std::string join17(const std::vector<double>& v, char delim = ',');

}  // namespace afs::text
