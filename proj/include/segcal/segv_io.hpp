#ifndef SEGCAL_SEGV_IO_HPP
#define SEGCAL_SEGV_IO_HPP

#include <filesystem>
#include <string>
#include <variant>

#include "segcal/volume.hpp"

namespace segcal {

// Malformed SEGV1 file. `byte_offset` locates the problem in the file.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg, long long byte_offset = -1)
      : std::runtime_error(msg), byte_offset_(byte_offset) {}
  long long byte_offset() const { return byte_offset_; }

 private:
  long long byte_offset_;
};

using VolumeVariant = std::variant<LabelVolume, ProbabilityVolume>;

// SEGV1 container: "SEGV1\n", one line of canonical JSON, then the raw
// little-endian payload (labels as u8, probs as f32 with channel fastest).
VolumeVariant read_volume(const std::filesystem::path& path);

void write_volume(const LabelVolume& v, const std::filesystem::path& path);
void write_volume(const ProbabilityVolume& v, const std::filesystem::path& path);
void write_volume(const VolumeVariant& v, const std::filesystem::path& path);

// In-memory serialization, used for byte-exactness checks.
std::string serialize_volume(const LabelVolume& v);
std::string serialize_volume(const ProbabilityVolume& v);

}  // namespace segcal

#endif
