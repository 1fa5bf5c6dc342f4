#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "bmx/stats.hpp"

namespace bmx::cli {

std::string format_number(double x);
long parse_long(const std::string& v);
std::uint64_t parse_seed(const std::string& v);
bool parse_bool(const std::string& v);

// A boundary label name (S1, AnnulusInner, ...) or re>X, re<X, im>X, im<X on
// the exit point.
ExitPredicate parse_region(const std::string& v);

}  // namespace bmx::cli
