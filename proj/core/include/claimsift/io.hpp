#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "claimsift/tensor.hpp"

namespace claimsift {

// Flat little-endian int32 matrix with a JSON sidecar (<path>.json) giving
// the shape.
void write_id_matrix(const std::string& path, const IdMatrix& m);
IdMatrix read_id_matrix(const std::string& path);

// Label arrays use the same container, shaped N x 1.
void write_labels(const std::string& path, const std::vector<int32_t>& labels);
std::vector<int32_t> read_labels(const std::string& path);

// FNV-1a digest of a file's bytes, as "fnv1a64:<hex>".
std::string file_digest(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// RFC 3339 UTC timestamp for manifests.
std::string timestamp_utc();

}  // namespace claimsift
