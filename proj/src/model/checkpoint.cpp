#include "model/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "common/error.hpp"
#include "model/config_io.hpp"

namespace vfn::model {

using nlohmann::json;
using num::Tensor;

namespace {

constexpr char kMagic[9] = "VFNCKPT1";  // 8 payload bytes + terminator

void append_entry(json& manifest, const std::string& name, const num::Shape& shape,
                  std::int64_t offset) {
  manifest.push_back(json{{"name", name}, {"shape", shape}, {"offset", offset}});
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  json manifest = json::array();
  std::vector<const std::vector<double>*> blocks;
  std::int64_t offset = 0;

  for (const auto& name : ck.params.names()) {
    const Tensor& t = ck.params.at(name);
    append_entry(manifest, name, t.shape, offset);
    blocks.push_back(&t.values);
    offset += static_cast<std::int64_t>(t.values.size() * sizeof(double));
  }
  for (const auto& name : ck.params.names()) {
    auto it = ck.moments.find(name);
    if (it == ck.moments.end()) continue;
    const auto size = static_cast<std::int64_t>(it->second.first.size());
    append_entry(manifest, "opt.m:" + name, {size}, offset);
    blocks.push_back(&it->second.first);
    offset += size * static_cast<std::int64_t>(sizeof(double));
    append_entry(manifest, "opt.v:" + name, {size}, offset);
    blocks.push_back(&it->second.second);
    offset += size * static_cast<std::int64_t>(sizeof(double));
  }

  json header{{"config", ck.config},
              {"model", config_to_json(ck.model_cfg)},
              {"step", ck.step},
              {"manifest", manifest}};
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::io_error, "cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  const std::uint64_t header_len = header_text.size();
  char len_bytes[8];
  for (int i = 0; i < 8; ++i) len_bytes[i] = static_cast<char>((header_len >> (8 * i)) & 0xff);
  out.write(len_bytes, 8);
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto* block : blocks) {
    out.write(reinterpret_cast<const char*>(block->data()),
              static_cast<std::streamsize>(block->size() * sizeof(double)));
  }
  if (!out) raise(ErrorCode::io_error, "short write while saving checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io_error, "cannot open checkpoint: " + path);

  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    raise(ErrorCode::parse_error, "not a checkpoint file: " + path);
  }
  char len_bytes[8];
  in.read(len_bytes, 8);
  if (!in) raise(ErrorCode::parse_error, "truncated checkpoint header: " + path);
  std::uint64_t header_len = 0;
  for (int i = 0; i < 8; ++i) {
    header_len |= static_cast<std::uint64_t>(static_cast<unsigned char>(len_bytes[i])) << (8 * i);
  }
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) raise(ErrorCode::parse_error, "truncated checkpoint header: " + path);

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    raise(ErrorCode::parse_error, std::string("bad checkpoint header: ") + e.what());
  }

  Checkpoint ck;
  ck.config = header.value("config", json::object());
  ck.model_cfg = config_from_json(header.at("model"));
  ck.step = header.value("step", std::int64_t{0});

  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto payload_size = static_cast<std::int64_t>(payload.size());

  std::unordered_map<std::string, std::vector<double>> raw_moments;
  for (const auto& entry : header.at("manifest")) {
    const std::string name = entry.at("name").get<std::string>();
    const num::Shape shape = entry.at("shape").get<num::Shape>();
    const std::int64_t offset = entry.at("offset").get<std::int64_t>();
    const std::int64_t count = num::numel(shape);
    const std::int64_t bytes = count * static_cast<std::int64_t>(sizeof(double));
    if (offset < 0 || offset + bytes > payload_size) {
      raise(ErrorCode::parse_error, "checkpoint entry '" + name + "' overruns the payload");
    }
    std::vector<double> values(static_cast<std::size_t>(count));
    std::memcpy(values.data(), payload.data() + offset, static_cast<std::size_t>(bytes));
    if (name.rfind("opt.m:", 0) == 0 || name.rfind("opt.v:", 0) == 0) {
      raw_moments.emplace(name, std::move(values));
    } else {
      ck.params.add(name, Tensor(shape, std::move(values)));
    }
  }
  for (const auto& name : ck.params.names()) {
    auto m = raw_moments.find("opt.m:" + name);
    auto v = raw_moments.find("opt.v:" + name);
    if (m != raw_moments.end() && v != raw_moments.end()) {
      ck.moments.emplace(name, std::make_pair(std::move(m->second), std::move(v->second)));
    }
  }
  return ck;
}

Model model_from_checkpoint(const Checkpoint& ck) {
  Model m = init_model(ck.model_cfg, 0);
  for (const auto& name : m.params.names()) {
    if (!ck.params.contains(name)) {
      raise(ErrorCode::parse_error, "checkpoint is missing parameter '" + name + "'");
    }
    const Tensor& loaded = ck.params.at(name);
    Tensor& target = m.params.at(name);
    if (loaded.shape != target.shape) {
      raise(ErrorCode::shape_mismatch, "checkpoint parameter '" + name + "' has shape " +
                                           num::shape_str(loaded.shape) + ", expected " +
                                           num::shape_str(target.shape));
    }
    target.values = loaded.values;
  }
  return m;
}

Checkpoint make_checkpoint(const Model& m, json config_echo, std::int64_t step,
                           const num::AdamW* opt) {
  Checkpoint ck;
  ck.config = std::move(config_echo);
  ck.model_cfg = m.cfg;
  ck.step = step;
  for (const auto& name : m.params.names()) ck.params.add(name, m.params.at(name));
  if (opt != nullptr && opt->steps_taken() > 0) {
    for (const auto& name : m.params.names()) {
      ck.moments.emplace(name, std::make_pair(opt->moment1(name), opt->moment2(name)));
    }
  }
  return ck;
}

}  // namespace vfn::model
