#ifndef CROPFORGE_CHECKPOINT_HPP
#define CROPFORGE_CHECKPOINT_HPP

#include <fstream>
#include <optional>
#include <string>
#include <utility>

#include "cropforge/params.hpp"
#include "cropforge/tensor.hpp"

namespace cropforge {

// Checkpoint wire format, all little-endian:
//   magic "CFCK", format version u32, then one record per tensor:
//   name length u32, name bytes, shape rank u32, dims u32 each, f64 payload.
// Records are written in registration order so identical training runs
// produce byte-identical files. Names starting with "_config." are reserved
// for scalar hyperparameter records, making a model checkpoint
// self-describing.
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointWriter {
 public:
  explicit CheckpointWriter(const std::string& path);
  void record(const std::string& name, const Tensor& tensor);
  void close();

 private:
  std::ofstream os_;
  std::string path_;
};

class CheckpointReader {
 public:
  // Validates magic and version up front; throws IoError otherwise.
  explicit CheckpointReader(const std::string& path);
  // nullopt at end of file.
  std::optional<std::pair<std::string, Tensor>> next();

 private:
  std::ifstream is_;
  std::string path_;
};

// Whole-ModelParams convenience wrappers (no config records).
void save_checkpoint(const std::string& path, const ModelParams& params);
// Appends every record into `params`, assigning groups by name prefix
// ("saliency." -> saliency group, everything else -> regression group).
void load_checkpoint(const std::string& path, ModelParams& params);

}  // namespace cropforge

#endif  // CROPFORGE_CHECKPOINT_HPP
