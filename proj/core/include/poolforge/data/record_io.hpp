#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poolforge/data/record.hpp"

namespace poolforge::data {

// Record file, little-endian:
//
//   "PFRC"  u16 version
//   per record, until end of file:
//     u32 id_length, id bytes
//     u32 label_count, u32 labels[label_count]
//     u32 T
//     u32 video_dims, u32 audio_dims
//     float32 video[T * video_dims], float32 audio[T * audio_dims]   (finite)
inline constexpr char kRecordMagic[4] = {'P', 'F', 'R', 'C'};
inline constexpr std::uint16_t kRecordVersion = 1;

std::string encode_records(std::span<const VideoRecord> records);

// Incremental decoder over an in-memory file image. Errors are FormatError
// with the byte offset and the last record decoded successfully.
class RecordReader {
 public:
  explicit RecordReader(std::string bytes);

  // Next record, or nullopt at a clean end of file.
  std::optional<VideoRecord> next();
  std::size_t records_read() const { return count_; }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
  std::size_t count_ = 0;
  std::string last_id_;
};

std::vector<VideoRecord> decode_records(std::string bytes);

void write_records(const std::filesystem::path& path, std::span<const VideoRecord> records);
std::vector<VideoRecord> read_records(const std::filesystem::path& path);

// Manifest: one record-file path per line; blank lines and '#' comments are
// skipped; relative paths resolve against the manifest's directory.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const std::filesystem::path> files);
std::vector<VideoRecord> load_manifest(const std::filesystem::path& path);

}  // namespace poolforge::data
