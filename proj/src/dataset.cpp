#include "cropforge/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cropforge/errors.hpp"
#include "cropforge/image.hpp"

namespace fs = std::filesystem;

namespace cropforge {

namespace {

std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_dataset(const std::string& dir, const std::vector<SyntheticSample>& samples) {
  fs::create_directories(fs::path(dir) / "images");
  fs::create_directories(fs::path(dir) / "saliency");

  std::ofstream csv(fs::path(dir) / "crops.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write crops.csv under " + dir);
  for (const auto& s : samples) {
    save_image_png((fs::path(dir) / "images" / (s.id + ".png")).string(), s.image);
    Tensor mask({1, s.saliency.dim(0), s.saliency.dim(1)}, s.saliency.values());
    save_image_png((fs::path(dir) / "saliency" / (s.id + ".png")).string(), mask);
    csv << s.id << ',' << format_coord(s.crop.x_min) << ',' << format_coord(s.crop.y_min) << ','
        << format_coord(s.crop.x_max) << ',' << format_coord(s.crop.y_max) << '\n';
  }
  if (!csv) throw IoError("failed writing crops.csv under " + dir);
}

Dataset load_dataset(const std::string& dir, bool require_saliency) {
  const fs::path images = fs::path(dir) / "images";
  if (!fs::is_directory(images)) throw IoError("dataset has no images/ directory: " + dir);

  std::map<std::string, Rect> crops;
  {
    std::ifstream csv(fs::path(dir) / "crops.csv");
    if (csv) {
      std::string line;
      while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string id, field;
        if (!std::getline(row, id, ',')) continue;
        double v[4];
        bool ok = true;
        for (double& coord : v) {
          if (!std::getline(row, field, ',')) {
            ok = false;
            break;
          }
          coord = std::strtod(field.c_str(), nullptr);
        }
        if (ok) crops[id] = Rect{v[0], v[1], v[2], v[3]};
      }
    }
  }

  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(images)) {
    if (entry.path().extension() == ".png" || entry.path().extension() == ".pgm") {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());

  Dataset out;
  for (const auto& id : ids) {
    const fs::path png = images / (id + ".png");
    const fs::path img_path = fs::exists(png) ? png : images / (id + ".pgm");

    auto crop = crops.find(id);
    if (crop == crops.end()) {
      out.missing_crops.push_back(id);
      continue;
    }

    SyntheticSample s;
    s.id = id;
    s.image = load_image(img_path.string());
    const fs::path mask_path = fs::path(dir) / "saliency" / (id + ".png");
    if (fs::exists(mask_path)) {
      Tensor mask = to_grayscale(load_image(mask_path.string()));
      s.saliency = Tensor({mask.dim(1), mask.dim(2)}, mask.values());
    } else if (require_saliency) {
      throw IoError("dataset sample " + id + " has no saliency mask under " + dir);
    }
    s.crop = crop->second;
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty() && out.missing_crops.empty()) throw IoError("dataset is empty: " + dir);
  return out;
}

std::uint64_t dataset_checksum(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
    return a.lexically_relative(dir) < b.lexically_relative(dir);
  });

  std::uint64_t hash = 0xcbf29ce484222325ull;
  auto mix = [&hash](const char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(data[i]);
      hash *= 0x100000001b3ull;
    }
  };
  for (const auto& f : files) {
    const std::string rel = f.lexically_relative(dir).generic_string();
    mix(rel.data(), rel.size());
    std::ifstream is(f, std::ios::binary);
    char buf[8192];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
      mix(buf, static_cast<std::size_t>(is.gcount()));
      if (is.eof()) break;
    }
  }
  return hash;
}

}  // namespace cropforge
