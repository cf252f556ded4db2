#include "poolforge/models/checkpoint.hpp"

#include <json.hpp>

#include "binary_io.hpp"
#include "model_config_json.hpp"
#include "poolforge/error.hpp"
#include "poolforge/models/model.hpp"

namespace poolforge::models {

namespace {

enum class Kind : std::uint8_t { kParam = 0, kBuffer = 1, kOptimizer = 2 };

void put_tensor(detail::ByteWriter& w, Kind kind, const std::string& name, const Tensor& t) {
  w.u8(static_cast<std::uint8_t>(kind));
  w.u32(static_cast<std::uint32_t>(name.size()));
  w.bytes(name.data(), name.size());
  w.u8(8);
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
  for (double v : t.data()) w.f64(v);
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
  nlohmann::json header;
  nlohmann::json model;
  to_json_object(model, ck.model);
  header["model"] = model;
  try {
    header["metadata"] = nlohmann::json::parse(ck.metadata);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  const std::string text = header.dump();

  detail::ByteWriter w;
  w.bytes(kCheckpointMagic, 4);
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text.data(), text.size());
  const std::size_t count = ck.params.params().size() + ck.params.buffers().size() + ck.optimizer.size();
  w.u32(static_cast<std::uint32_t>(count));
  for (const auto& [name, t] : ck.params.params()) put_tensor(w, Kind::kParam, name, t);
  for (const auto& [name, t] : ck.params.buffers()) put_tensor(w, Kind::kBuffer, name, t);
  for (const auto& [name, t] : ck.optimizer) put_tensor(w, Kind::kOptimizer, name, t);
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  detail::ByteReader r(bytes);
  if (r.remaining() < 4 || std::string_view(bytes).substr(0, 4) != std::string_view(kCheckpointMagic, 4))
    throw FormatError("checkpoint: missing PFCK magic at offset 0");
  r.bytes(4, "magic");
  const std::uint16_t version = r.u16("version");
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " at offset 4");
  const std::uint32_t header_len = r.u32("header length");
  const std::string_view header_text = r.bytes(header_len, "header");

  Checkpoint ck;
  try {
    const auto header = nlohmann::json::parse(header_text);
    ck.model = from_json_object(header.at("model"));
    ck.metadata = header.contains("metadata") ? header.at("metadata").dump() : "{}";
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: bad model config: ") + e.what());
  }

  const std::uint32_t count = r.u32("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t start = r.offset();
    const auto kind = r.u8("tensor kind");
    const std::uint32_t name_len = r.u32("name length");
    const std::string name(r.bytes(name_len, "tensor name"));
    const auto dtype = r.u8("dtype");
    if (dtype != 8 && dtype != 4)
      throw FormatError("checkpoint: unknown dtype " + std::to_string(dtype) + " for " + name);
    const std::uint32_t rank = r.u32("rank");
    r.need(std::size_t{rank} * 4, "dims");
    Shape shape;
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::uint32_t extent = r.u32("dim");
      if (extent == 0) throw FormatError("checkpoint: zero extent in " + name);
      shape.push_back(extent);
      n *= extent;
      if (n > r.remaining()) throw FormatError("checkpoint: tensor " + name + " larger than the file");
    }
    r.need(n * dtype, "tensor data");
    std::vector<double> values(n);
    for (std::size_t k = 0; k < n; ++k) values[k] = dtype == 8 ? r.f64("value") : static_cast<double>(r.f32("value"));
    Tensor t(std::move(shape), std::move(values));
    if (!t.all_finite()) throw FormatError("checkpoint: non-finite values in " + name);
    if (ck.params.has_param(name) || ck.params.has_buffer(name) || ck.optimizer.count(name))
      throw FormatError("checkpoint: duplicate tensor " + name + " at offset " + std::to_string(start));
    switch (kind) {
      case 0:
        ck.params.add_param(name, std::move(t));
        break;
      case 1:
        ck.params.add_buffer(name, std::move(t));
        break;
      case 2:
        ck.optimizer.emplace(name, std::move(t));
        break;
      default:
        throw FormatError("checkpoint: unknown tensor kind " + std::to_string(kind) + " at offset " +
                          std::to_string(start));
    }
  }
  if (!r.at_end()) throw FormatError("checkpoint: trailing bytes at offset " + std::to_string(r.offset()));
  return ck;
}

void check_compatible(const Checkpoint& ck) {
  const layers::ParamStore expected = init_model(ck.model, 0);
  auto compare = [](const std::map<std::string, Tensor>& want, const std::map<std::string, Tensor>& got,
                    const char* what) {
    for (const auto& [name, t] : want) {
      auto it = got.find(name);
      if (it == got.end()) throw ConfigError(std::string("checkpoint lacks ") + what + " " + name);
      if (it->second.shape() != t.shape())
        throw ConfigError(std::string("checkpoint ") + what + " " + name + " has shape " +
                          shape_string(it->second.shape()) + ", model expects " + shape_string(t.shape()));
    }
    for (const auto& entry : got)
      if (!want.count(entry.first)) throw ConfigError(std::string("checkpoint has unexpected ") + what + " " + entry.first);
  };
  compare(expected.params(), ck.params.params(), "parameter");
  compare(expected.buffers(), ck.params.buffers(), "buffer");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  detail::write_file(path.string(), encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file(path.string()));
}

}  // namespace poolforge::models
