#pragma once

#include "pirec/tensor.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>

namespace pirec {

/// A painted draft: binary edge layer and flat color layer of equal size.
/// Exported as a zip holding edge.png, color_domain.png and draft.json.
struct Draft {
  Tensor<float> edge;   // 1 x H x W in {0, 1}
  Tensor<float> color;  // 3 x H x W in [0, 1]
  /// Free-form client fields (brush, phase toggle, ...), kept verbatim.
  nlohmann::json meta = nlohmann::json::object();
};

inline constexpr int kDraftVersion = 1;

std::string export_draft(const Draft& draft);
/// Throws std::runtime_error on malformed archives or mismatched layers.
Draft import_draft(const std::string& zip_bytes);

/// Minimal zip container (stored entries on write; stored or deflated on read).
std::string zip_files(const std::map<std::string, std::string>& files);
std::map<std::string, std::string> unzip_files(const std::string& zip_bytes);

}  // namespace pirec
