#pragma once

#include <string>

namespace rxndp {

std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);

/// "http://host:port/some/path" -> {"http://host:port", "/some/path"}.
struct SplitUrl {
  std::string base;
  std::string path;
};

SplitUrl split_url(const std::string& url);

}  // namespace rxndp
