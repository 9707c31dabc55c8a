#ifndef RNNLENS_IO_UTIL_H_
#define RNNLENS_IO_UTIL_H_

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace rnnlens {

using Json = nlohmann::json;

// Reads a whole file. Throws NotFound if it cannot be opened.
std::string ReadFile(const std::filesystem::path& path);

// Writes `contents` to a temporary sibling file and renames it over `path`,
// so readers never observe a partially written file.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents);

// Lowercase hex SHA-256 digest.
std::string Sha256Hex(std::string_view data);

// Rounds to `digits` significant decimal digits. Used for display payloads.
double RoundSignificant(double value, int digits = 6);

// Throws ConfigError naming the first key of `object` not in `allowed`.
// `context` prefixes the message, e.g. "model".
void RequireKnownKeys(const Json& object,
                      std::initializer_list<std::string_view> allowed,
                      std::string_view context);

[[noreturn]] void ThrowConfigTypeError(std::string_view context,
                                       const std::string& key);

// Returns object[key] converted to T, or `fallback` when the key is absent.
// Type mismatches raise ConfigError with the key path in the message.
template <typename T>
T GetOr(const Json& object, const std::string& key, const T& fallback,
        std::string_view context) {
  auto it = object.find(key);
  if (it == object.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    ThrowConfigTypeError(context, key);
  }
}

// Vector helpers for JSON payloads.
Json VectorToJson(const Eigen::VectorXd& v, bool display_precision);
Eigen::VectorXd VectorFromJson(const Json& j);

}  // namespace rnnlens

#endif  // RNNLENS_IO_UTIL_H_
