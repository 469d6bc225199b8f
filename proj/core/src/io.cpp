#include "claimsift/io.hpp"

#include <bit>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "claimsift/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary matrix format is little-endian");

namespace claimsift {

using nlohmann::json;

void write_id_matrix(const std::string& path, const IdMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write \"" + path + "\"");
  out.write(reinterpret_cast<const char*>(m.ids.data()),
            static_cast<std::streamsize>(m.ids.size() * sizeof(int32_t)));
  if (!out) throw Error("write failed for \"" + path + "\"");
  json sidecar = {{"dtype", "int32"}, {"order", "row-major"}, {"shape", {m.rows, m.cols}}};
  write_text_file(path + ".json", sidecar.dump(2) + "\n");
}

IdMatrix read_id_matrix(const std::string& path) {
  json sidecar;
  {
    std::ifstream meta(path + ".json", std::ios::binary);
    if (!meta) throw DataError("missing sidecar \"" + path + ".json\"");
    try {
      meta >> sidecar;
    } catch (const json::exception& e) {
      throw DataError(path + ".json: malformed sidecar: " + std::string(e.what()));
    }
  }
  if (sidecar.value("dtype", "") != "int32" || !sidecar.contains("shape")) {
    throw DataError(path + ".json: unexpected sidecar contents");
  }
  const auto shape = sidecar["shape"].get<std::vector<int>>();
  if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) {
    throw DataError(path + ".json: bad shape");
  }
  IdMatrix m(shape[0], shape[1]);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open \"" + path + "\"");
  in.read(reinterpret_cast<char*>(m.ids.data()),
          static_cast<std::streamsize>(m.ids.size() * sizeof(int32_t)));
  if (in.gcount() != static_cast<std::streamsize>(m.ids.size() * sizeof(int32_t))) {
    throw IntegrityError(path + ": truncated, expected " +
                         std::to_string(m.ids.size() * sizeof(int32_t)) + " bytes");
  }
  return m;
}

void write_labels(const std::string& path, const std::vector<int32_t>& labels) {
  IdMatrix m(static_cast<int>(labels.size()), 1);
  m.ids = labels;
  write_id_matrix(path, m);
}

std::vector<int32_t> read_labels(const std::string& path) {
  IdMatrix m = read_id_matrix(path);
  if (m.cols != 1) throw DataError(path + ": expected a column vector");
  return m.ids;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open \"" + path + "\" for digest");
  uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + hex;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write \"" + path + "\"");
  out << content;
  if (!out) throw Error("write failed for \"" + path + "\"");
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace claimsift
