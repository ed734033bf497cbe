#include "cropforge/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "cropforge/errors.hpp"

namespace cropforge {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

constexpr char kMagic[4] = {'C', 'F', 'C', 'K'};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

CheckpointWriter::CheckpointWriter(const std::string& path)
    : os_(path, std::ios::binary | std::ios::trunc), path_(path) {
  if (!os_) throw IoError("cannot open checkpoint for writing: " + path);
  os_.write(kMagic, 4);
  write_u32(os_, kCheckpointVersion);
}

void CheckpointWriter::record(const std::string& name, const Tensor& t) {
  write_u32(os_, static_cast<std::uint32_t>(name.size()));
  os_.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(os_, static_cast<std::uint32_t>(t.rank()));
  for (int d : t.shape()) write_u32(os_, static_cast<std::uint32_t>(d));
  os_.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!os_) throw IoError("failed writing checkpoint: " + path_);
}

void CheckpointWriter::close() {
  os_.close();
  if (!os_) throw IoError("failed writing checkpoint: " + path_);
}

CheckpointReader::CheckpointReader(const std::string& path) : is_(path, std::ios::binary), path_(path) {
  if (!is_) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  is_.read(magic, 4);
  if (!is_ || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a checkpoint file (bad magic): " + path);
  }
  const std::uint32_t version = read_u32(is_);
  if (!is_ || version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version in " + path);
  }
}

std::optional<std::pair<std::string, Tensor>> CheckpointReader::next() {
  std::uint32_t name_len = 0;
  is_.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
  if (is_.eof()) return std::nullopt;
  if (!is_ || name_len == 0 || name_len > 4096) throw IoError("corrupt checkpoint record in " + path_);
  std::string name(name_len, '\0');
  is_.read(name.data(), name_len);
  const std::uint32_t rank = read_u32(is_);
  if (!is_ || rank > 8) throw IoError("corrupt checkpoint record in " + path_);
  Shape shape(rank);
  for (auto& d : shape) d = static_cast<int>(read_u32(is_));
  Tensor t(shape);
  is_.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!is_) throw IoError("truncated checkpoint payload in " + path_);
  return std::make_pair(std::move(name), std::move(t));
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
  CheckpointWriter writer(path);
  for (const auto& name : params.names()) writer.record(name, params.at(name).value());
  writer.close();
}

void load_checkpoint(const std::string& path, ModelParams& params) {
  CheckpointReader reader(path);
  while (auto rec = reader.next()) {
    const ParamGroup group =
        rec->first.rfind("saliency.", 0) == 0 ? ParamGroup::kSaliency : ParamGroup::kRegression;
    params.add(rec->first, group, std::move(rec->second));
  }
}

}  // namespace cropforge
