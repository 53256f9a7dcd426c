#pragma once

#include "pirec/tensor.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pirec {

/// Self-describing binary container: magic, format version, a JSON header
/// (free-form metadata plus a tensor table) and raw little-endian payload.
class Archive {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  nlohmann::json& meta() { return meta_; }
  const nlohmann::json& meta() const { return meta_; }

  template <typename Scalar>
  void put(const std::string& name, const RowMatrix<Scalar>& m);
  /// Converts to the requested scalar type when the stored one differs.
  template <typename Scalar>
  RowMatrix<Scalar> get(const std::string& name) const;

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::vector<std::string> names() const;

  /// Writes to a temporary sibling and renames it over `path`.
  void save(const std::string& path) const;
  static Archive load(const std::string& path);

 private:
  struct Entry {
    std::string dtype;  // "f32" | "f64"
    Eigen::Index rows = 0, cols = 0;
    std::vector<unsigned char> bytes;
  };
  nlohmann::json meta_ = nlohmann::json::object();
  std::map<std::string, Entry> entries_;
};

/// Writes bytes to `path` via temp file + rename.
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace pirec
