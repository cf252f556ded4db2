#include "poolforge/data/record_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "binary_io.hpp"
#include "poolforge/error.hpp"

namespace poolforge::data {

namespace {

constexpr std::size_t kHeaderBytes = 6;

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw DataError(std::string(what) + " exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::string encode_records(std::span<const VideoRecord> records) {
  detail::ByteWriter w;
  w.bytes(kRecordMagic, 4);
  w.u16(kRecordVersion);
  for (const VideoRecord& r : records) {
    r.validate();
    w.u32(checked_u32(r.id.size(), "id length"));
    w.bytes(r.id.data(), r.id.size());
    w.u32(checked_u32(r.labels.size(), "label count"));
    for (std::uint32_t l : r.labels) w.u32(l);
    w.u32(checked_u32(r.frames(), "frame count"));
    w.u32(checked_u32(r.video.cols, "video dims"));
    w.u32(checked_u32(r.audio.cols, "audio dims"));
    for (float v : r.video.values) w.f32(v);
    for (float v : r.audio.values) w.f32(v);
  }
  return w.take();
}

RecordReader::RecordReader(std::string bytes) : bytes_(std::move(bytes)) {
  if (bytes_.size() < 4 || std::string_view(bytes_).substr(0, 4) != std::string_view(kRecordMagic, 4))
    throw FormatError("record file: missing PFRC magic at offset 0");
  detail::ByteReader r(bytes_);
  r.bytes(4, "magic");
  const std::uint16_t version = r.u16("version");
  if (version != kRecordVersion)
    throw FormatError("record file: unsupported version " + std::to_string(version) + " at offset 4");
  pos_ = kHeaderBytes;
}

std::optional<VideoRecord> RecordReader::next() {
  if (pos_ == bytes_.size()) return std::nullopt;
  const std::size_t start = pos_;
  auto fail = [&](const std::string& why) -> FormatError {
    std::string where = count_ == 0 ? std::string("no complete record before it")
                                    : "last good record #" + std::to_string(count_ - 1) + " '" + last_id_ + "'";
    return FormatError("record file: " + why + " in record #" + std::to_string(count_) + " starting at offset " +
                       std::to_string(start) + " (" + where + ")");
  };

  detail::ByteReader r(std::string_view(bytes_).substr(pos_));
  VideoRecord rec;
  try {
    const std::uint32_t id_len = r.u32("id length");
    rec.id = std::string(r.bytes(id_len, "id"));
    const std::uint32_t label_count = r.u32("label count");
    if (label_count == 0) throw fail("empty label set");
    r.need(std::size_t{label_count} * 4, "labels");
    rec.labels.resize(label_count);
    for (auto& l : rec.labels) l = r.u32("label");
    for (std::size_t i = 1; i < rec.labels.size(); ++i)
      if (rec.labels[i] <= rec.labels[i - 1]) throw fail("labels not strictly increasing");
    const std::uint32_t frames = r.u32("frame count");
    const std::uint32_t video_dims = r.u32("video dims");
    const std::uint32_t audio_dims = r.u32("audio dims");
    if (frames == 0) throw fail("zero frame count");
    if (video_dims == 0 || audio_dims == 0) throw fail("zero feature width");
    // 64-bit products of 32-bit fields cannot overflow.
    const std::uint64_t floats = std::uint64_t{frames} * (std::uint64_t{video_dims} + audio_dims);
    if (floats > r.remaining() / 4) throw fail("frame payload of " + std::to_string(floats) + " floats exceeds file");
    rec.video = FrameMatrix(frames, video_dims);
    rec.audio = FrameMatrix(frames, audio_dims);
    for (float& v : rec.video.values) v = r.f32("video value");
    for (float& v : rec.audio.values) v = r.f32("audio value");
    for (const auto* m : {&rec.video, &rec.audio})
      for (float v : m->values)
        if (!std::isfinite(v)) throw fail("non-finite frame value");
  } catch (const FormatError& e) {
    const std::string what = e.what();
    if (what.rfind("record file:", 0) == 0) throw;
    throw fail(what);
  }
  pos_ += r.offset();
  ++count_;
  last_id_ = rec.id;
  return rec;
}

std::vector<VideoRecord> decode_records(std::string bytes) {
  RecordReader reader(std::move(bytes));
  std::vector<VideoRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

void write_records(const std::filesystem::path& path, std::span<const VideoRecord> records) {
  detail::write_file(path.string(), encode_records(records));
}

std::vector<VideoRecord> read_records(const std::filesystem::path& path) {
  return decode_records(detail::read_file(path.string()));
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::vector<std::filesystem::path> files;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::filesystem::path p = line.substr(first);
    if (p.is_relative()) p = path.parent_path() / p;
    files.push_back(p);
  }
  return files;
}

void write_manifest(const std::filesystem::path& path, std::span<const std::filesystem::path> files) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot create manifest " + path.string());
  for (const auto& f : files) out << f.string() << '\n';
  if (!out) throw DataError("error writing manifest " + path.string());
}

std::vector<VideoRecord> load_manifest(const std::filesystem::path& path) {
  std::vector<VideoRecord> all;
  for (const auto& file : read_manifest(path)) {
    auto part = read_records(file);
    for (auto& r : part) all.push_back(std::move(r));
  }
  return all;
}

}  // namespace poolforge::data
