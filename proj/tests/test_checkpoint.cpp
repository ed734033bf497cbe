#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "cropforge/checkpoint.hpp"
#include "cropforge/errors.hpp"
#include "cropforge/model.hpp"

using namespace cropforge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("cropforge_test_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("raw parameter records round-trip") {
  TempDir tmp;
  ModelParams src;
  Rng rng(3);
  Tensor w({3, 2, 3, 3});
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
  src.add("saliency.enc0.conv0.weight", ParamGroup::kSaliency, w);
  src.add("regress.fc1.bias", ParamGroup::kRegression, Tensor({5}, {1, 2, 3, 4, 5}));

  save_checkpoint(tmp.file("p.cfck"), src);

  ModelParams dst;
  load_checkpoint(tmp.file("p.cfck"), dst);
  REQUIRE(dst.names() == src.names());
  CHECK(dst.at("saliency.enc0.conv0.weight").value().values() == w.values());
  CHECK(dst.group_of("saliency.enc0.conv0.weight") == ParamGroup::kSaliency);
  CHECK(dst.group_of("regress.fc1.bias") == ParamGroup::kRegression);
}

TEST_CASE("bad magic and truncation are rejected") {
  TempDir tmp;
  {
    std::ofstream os(tmp.file("junk.cfck"), std::ios::binary);
    os << "NOPE1234";
  }
  ModelParams p;
  CHECK_THROWS_AS(load_checkpoint(tmp.file("junk.cfck"), p), IoError);
  CHECK_THROWS_AS(load_checkpoint(tmp.file("missing.cfck"), p), IoError);

  {
    ModelParams src;
    src.add("saliency.a", ParamGroup::kSaliency, Tensor({4}, {1, 2, 3, 4}));
    save_checkpoint(tmp.file("trunc.cfck"), src);
  }
  // Chop the payload mid-record.
  const auto full = fs::file_size(tmp.file("trunc.cfck"));
  fs::resize_file(tmp.file("trunc.cfck"), full - 9);
  ModelParams q;
  CHECK_THROWS_AS(load_checkpoint(tmp.file("trunc.cfck"), q), IoError);
}

TEST_CASE("model checkpoints are self-describing and byte-stable") {
  TempDir tmp;
  ModelConfig cfg;
  cfg.unet = UNetConfig{.depth = 2, .base_channels = 4, .input_channels = 1, .kernel_size = 3, .seed = 99};
  cfg.head = HeadConfig{.grid = 2, .fc1 = 32, .fc2 = 16};
  CropModel model = CropModel::create(cfg);

  model.save(tmp.file("m1.cfck"));
  CropModel loaded = CropModel::load(tmp.file("m1.cfck"));
  CHECK(loaded.cfg.unet.depth == 2);
  CHECK(loaded.cfg.unet.base_channels == 4);
  CHECK(loaded.cfg.head.grid == 2);
  REQUIRE(loaded.params.names() == model.params.names());
  for (const auto& name : model.params.names()) {
    CHECK(loaded.params.at(name).value().values() == model.params.at(name).value().values());
  }

  // Re-saving the loaded model reproduces the file byte for byte.
  loaded.save(tmp.file("m2.cfck"));
  std::ifstream a(tmp.file("m1.cfck"), std::ios::binary), b(tmp.file("m2.cfck"), std::ios::binary);
  const std::string ba((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  const std::string bb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(ba == bb);
}

TEST_CASE("architecture mismatches in model files are detected") {
  TempDir tmp;
  ModelConfig cfg;
  cfg.unet = UNetConfig{.depth = 1, .base_channels = 2, .input_channels = 1, .kernel_size = 3, .seed = 1};
  cfg.head = HeadConfig{.grid = 2, .fc1 = 8, .fc2 = 4};
  CropModel model = CropModel::create(cfg);

  // Missing parameter record.
  {
    CheckpointWriter w(tmp.file("bad.cfck"));
    w.record("_config.depth", Tensor({1}, {1.0}));
    w.record("_config.base_channels", Tensor({1}, {2.0}));
    w.record("_config.input_channels", Tensor({1}, {1.0}));
    w.record("_config.kernel_size", Tensor({1}, {3.0}));
    w.record("_config.seed", Tensor({1}, {1.0}));
    w.record("_config.grid", Tensor({1}, {2.0}));
    w.record("_config.fc1", Tensor({1}, {8.0}));
    w.record("_config.fc2", Tensor({1}, {4.0}));
    w.close();
  }
  CHECK_THROWS_AS(CropModel::load(tmp.file("bad.cfck")), IoError);
}
