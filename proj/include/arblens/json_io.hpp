#pragma once

#include "arblens/decimal.hpp"
#include "arblens/error.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace arblens {

/// Reads `field` of `j` as a Decimal. Accepts JSON strings and numbers.
inline Decimal json_decimal(const nlohmann::json& j, const char* field, const std::string& ctx) {
    auto it = j.find(field);
    if (it == j.end()) throw Error(Errc::Parse, ctx + ": missing field '" + field + "'");
    if (it->is_string()) return Decimal::parse(it->get<std::string>());
    if (it->is_number()) return Decimal::parse(it->dump());
    throw Error(Errc::Parse, ctx + ": field '" + field + "' is not a number");
}

}  // namespace arblens
