#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "aee/errors.hpp"

namespace aee {

/// Throws ParseError naming the first key of `j` not in `allowed`.
inline void reject_unknown_keys(const nlohmann::json& j, std::string_view section,
                                std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ParseError(std::string(section) + " must be an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (auto key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ParseError("unknown key '" + item.key() + "' in " + std::string(section));
        }
    }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace aee
