#include "segcal/segv_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace segcal {

namespace {

using nlohmann::json;

constexpr char kMagic[] = "SEGV1\n";
constexpr std::size_t kMagicLen = 6;

json meta_json(const GridMeta& m) {
  json j;
  j["dims"] = {m.dims[0], m.dims[1], m.dims[2]};
  j["spacing"] = {m.spacing[0], m.spacing[1], m.spacing[2]};
  return j;
}

std::string header_line(const LabelVolume& v) {
  json j = meta_json(v.meta);
  j["classes"] = v.classes;
  j["kind"] = "labels";
  j["dtype"] = "u8";
  return j.dump();  // nlohmann objects keep keys sorted
}

std::string header_line(const ProbabilityVolume& v) {
  json j = meta_json(v.meta);
  j["classes"] = v.classes;
  j["kind"] = "probs";
  j["dtype"] = "f32";
  j["normalized"] = v.normalized;
  return j.dump();
}

GridMeta parse_meta(const json& j, long long hdr_off) {
  GridMeta m;
  try {
    auto d = j.at("dims");
    auto s = j.at("spacing");
    if (d.size() != 3 || s.size() != 3)
      throw FormatError("dims/spacing must have 3 entries", hdr_off);
    for (int a = 0; a < 3; ++a) {
      m.dims[a] = d[a].get<std::size_t>();
      m.spacing[a] = s[a].get<double>();
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad header fields: ") + e.what(), hdr_off);
  }
  return m;
}

void read_payload(std::ifstream& in, char* dst, std::size_t expect,
                  long long payload_off, const std::filesystem::path& path) {
  in.read(dst, static_cast<std::streamsize>(expect));
  const std::size_t got = static_cast<std::size_t>(in.gcount());
  if (got != expect)
    throw FormatError("truncated payload in " + path.string() + ": expected " +
                          std::to_string(expect) + " bytes, got " +
                          std::to_string(got),
                      payload_off + static_cast<long long>(got));
  // Trailing bytes after the declared payload are also a format violation.
  char extra;
  if (in.read(&extra, 1))
    throw FormatError("trailing bytes after payload",
                      payload_off + static_cast<long long>(expect));
}

}  // namespace

VolumeVariant read_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());

  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  if (in.gcount() != static_cast<std::streamsize>(kMagicLen) ||
      std::memcmp(magic, kMagic, kMagicLen) != 0)
    throw FormatError("missing SEGV1 magic in " + path.string(), 0);

  std::string line;
  if (!std::getline(in, line))
    throw FormatError("missing header line", kMagicLen);
  const long long hdr_off = kMagicLen;
  const long long payload_off = hdr_off + static_cast<long long>(line.size()) + 1;

  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed header JSON: ") + e.what(), hdr_off);
  }

  GridMeta meta = parse_meta(j, hdr_off);
  std::string kind, dtype;
  int classes = 0;
  try {
    kind = j.at("kind").get<std::string>();
    dtype = j.at("dtype").get<std::string>();
    classes = j.at("classes").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad header fields: ") + e.what(), hdr_off);
  }

  try {
    if (kind == "labels") {
      if (dtype != "u8")
        throw FormatError("labels require dtype u8", hdr_off);
      LabelVolume v;
      v.meta = meta;
      v.classes = classes;
      meta.validate();
      v.labels.resize(meta.voxel_count());
      read_payload(in, reinterpret_cast<char*>(v.labels.data()),
                   v.labels.size(), payload_off, path);
      v.validate();
      return v;
    }
    if (kind == "probs") {
      if (dtype != "f32")
        throw FormatError("probs require dtype f32", hdr_off);
      ProbabilityVolume v;
      v.meta = meta;
      v.classes = classes;
      try {
        v.normalized = j.at("normalized").get<bool>();
      } catch (const json::exception& e) {
        throw FormatError(std::string("bad header fields: ") + e.what(),
                          hdr_off);
      }
      meta.validate();
      if (classes < 1) throw FormatError("classes must be >= 1", hdr_off);
      v.probs.resize(meta.voxel_count() * std::size_t(classes));
      read_payload(in, reinterpret_cast<char*>(v.probs.data()),
                   v.probs.size() * sizeof(float), payload_off, path);
      v.validate();
      return v;
    }
  } catch (const ValidationError& e) {
    // Re-anchor validation failures at their payload byte offset; failures
    // without one (bad dims, K < 2, ...) point at the header instead.
    long long off =
        e.byte_offset() >= 0 ? payload_off + e.byte_offset() : hdr_off;
    throw FormatError(std::string("invalid payload: ") + e.what(), off);
  }
  throw FormatError("unknown kind '" + kind + "'", hdr_off);
}

std::string serialize_volume(const LabelVolume& v) {
  v.validate();
  std::string out = kMagic;
  out += header_line(v);
  out += '\n';
  out.append(reinterpret_cast<const char*>(v.labels.data()), v.labels.size());
  return out;
}

std::string serialize_volume(const ProbabilityVolume& v) {
  v.validate();
  std::string out = kMagic;
  out += header_line(v);
  out += '\n';
  out.append(reinterpret_cast<const char*>(v.probs.data()),
             v.probs.size() * sizeof(float));
  return out;
}

namespace {
void write_bytes(const std::string& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for write");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}
}  // namespace

void write_volume(const LabelVolume& v, const std::filesystem::path& path) {
  write_bytes(serialize_volume(v), path);
}

void write_volume(const ProbabilityVolume& v, const std::filesystem::path& path) {
  write_bytes(serialize_volume(v), path);
}

void write_volume(const VolumeVariant& v, const std::filesystem::path& path) {
  std::visit([&](const auto& vol) { write_volume(vol, path); }, v);
}

}  // namespace segcal
