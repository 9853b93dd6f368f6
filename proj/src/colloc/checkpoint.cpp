#include "colloc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "colloc/error.hpp"

namespace colloc {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in, const std::filesystem::path& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": truncated checkpoint");
  }
  return v;
}

}  // namespace

void save_checkpoint(const Parameters<float>& params, const std::filesystem::path& path) {
  ParameterLayout layout(params.config);
  if (params.values.size() != layout.total()) {
    fail(ErrorCode::InvalidArgument, "parameter vector does not match its config");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u32(out, kCheckpointVersion);
  const auto& c = params.config;
  for (int v : {c.n_layers, c.n_heads, c.d_model, c.vocab_size, c.context_length}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  put_u32(out, static_cast<std::uint32_t>(layout.tensors().size()));
  for (const auto& t : layout.tensors()) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto dim : t.shape) put_u32(out, static_cast<std::uint32_t>(dim));
    out.write(reinterpret_cast<const char*>(params.values.data() + t.offset),
              static_cast<std::streamsize>(t.size * sizeof(float)));
  }
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

Parameters<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingInput, "cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": not a checkpoint file");
  }
  if (get_u32(in, path) != kCheckpointVersion) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": unsupported checkpoint version");
  }
  ModelConfig c;
  c.n_layers = static_cast<int>(get_u32(in, path));
  c.n_heads = static_cast<int>(get_u32(in, path));
  c.d_model = static_cast<int>(get_u32(in, path));
  c.vocab_size = static_cast<int>(get_u32(in, path));
  c.context_length = static_cast<int>(get_u32(in, path));
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
  }
  ParameterLayout layout(c);
  Parameters<float> p{c, AlignedVector<float>(layout.total(), 0.0f)};
  const std::uint32_t count = get_u32(in, path);
  if (count != layout.tensors().size()) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": tensor count does not match config");
  }
  for (const auto& t : layout.tensors()) {
    const std::uint32_t len = get_u32(in, path);
    std::string name(len, '\0');
    if (len > 4096 || !in.read(name.data(), len) || name != t.name) {
      fail(ErrorCode::SchemaMismatch, path.string() + ": expected tensor " + t.name);
    }
    const std::uint32_t ndim = get_u32(in, path);
    if (ndim != t.shape.size()) fail(ErrorCode::SchemaMismatch, path.string() + ": bad rank for " + t.name);
    for (auto dim : t.shape) {
      if (get_u32(in, path) != dim) fail(ErrorCode::SchemaMismatch, path.string() + ": bad shape for " + t.name);
    }
    if (!in.read(reinterpret_cast<char*>(p.values.data() + t.offset),
                 static_cast<std::streamsize>(t.size * sizeof(float)))) {
      fail(ErrorCode::SchemaMismatch, path.string() + ": truncated data for " + t.name);
    }
  }
  return p;
}

}  // namespace colloc
