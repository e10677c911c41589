#pragma once

#include <string>

namespace lens {

// Handle to one input image. `bytes` holds an in-memory payload (uploads);
// otherwise `uri` names a file on disk. Either may be empty for images that
// only exist as ids in a mock world.
struct ImageRef {
  std::string id;
  std::string uri;
  std::string bytes;

  bool has_payload() const { return !bytes.empty() || !uri.empty(); }

  // Raw payload bytes. Throws ImageDecodeError when `uri` cannot be read.
  std::string load_payload() const;

  static ImageRef from_file(const std::string& path);
  static ImageRef from_bytes(std::string bytes);
};

}  // namespace lens
