#include "n2d/core/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <regex>

#include "n2d/core/error.hpp"
#include "n2d/core/io.hpp"

namespace n2d {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kIngestSize = 256;

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// Frame files named by ordinal, e.g. 000012.png -> 12.
std::vector<std::pair<int, fs::path>> list_frames(const fs::path& dir) {
  static const std::regex kPattern(R"((\d+)\.(png|jpg|jpeg|bmp|tif|tiff))", std::regex::icase);
  std::vector<std::pair<int, fs::path>> frames;
  if (!fs::is_directory(dir)) return frames;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, kPattern)) {
      frames.emplace_back(std::stoi(m[1].str()), entry.path());
    }
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

Mask resize_mask(const Mask& m, int height, int width) {
  if (m.height == height && m.width == width) return m;
  Mask out(height, width, m.frame_index);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(m.height - 1, static_cast<int>((y + 0.5) * m.height / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(m.width - 1, static_cast<int>((x + 0.5) * m.width / width));
      out.at(y, x) = m.at(sy, sx);
    }
  }
  return out;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& dataset_dir) {
  const fs::path path = dataset_dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw DataError("manifest not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
  DatasetManifest m;
  m.name = j.value("name", dataset_dir.filename().string());
  m.reference_path = j.value("reference_path", m.reference_path);
  m.night_dir = j.value("night_dir", m.night_dir);
  if (j.contains("gt_dir") && !j["gt_dir"].is_null()) m.gt_dir = j["gt_dir"].get<std::string>();
  m.train_split = j.value("train_split", m.train_split);
  if (m.train_split < 1) throw DataError("train_split must be positive");
  return m;
}

void save_manifest(const fs::path& dataset_dir, const DatasetManifest& m) {
  json j;
  j["name"] = m.name;
  j["reference_path"] = m.reference_path;
  j["night_dir"] = m.night_dir;
  j["gt_dir"] = m.gt_dir ? json(*m.gt_dir) : json(nullptr);
  j["train_split"] = m.train_split;
  write_file_atomic(dataset_dir / "manifest.json", j.dump(2) + "\n");
}

std::vector<Image> Dataset::train_frames() const {
  const auto n = static_cast<std::size_t>(std::min(train_split(), num_frames()));
  return {night.begin(), night.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<Image> Dataset::test_frames() const {
  const auto n = static_cast<std::size_t>(std::min(train_split(), num_frames()));
  return {night.begin() + static_cast<std::ptrdiff_t>(n), night.end()};
}

Image normalize_ingest_size(const Image& img) {
  if (is_power_of_two(img.height()) && is_power_of_two(img.width())) return img;
  return resize_bilinear(img, kIngestSize, kIngestSize);
}

Dataset load_dataset(const fs::path& dataset_dir) {
  Dataset ds;
  ds.manifest = load_manifest(dataset_dir);
  ds.reference = normalize_ingest_size(load_image(resolve(dataset_dir, ds.manifest.reference_path)));

  const auto frames = list_frames(resolve(dataset_dir, ds.manifest.night_dir));
  if (frames.empty()) throw DataError("no night frames in " + dataset_dir.string());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].first != static_cast<int>(i)) {
      throw DataError("night frames are not numbered consecutively from 0 (missing " + frame_name(static_cast<int>(i)) + ")");
    }
    ds.night.push_back(normalize_ingest_size(load_image(frames[i].second)));
  }
  if (ds.num_frames() < ds.manifest.train_split) {
    throw DataError("dataset has " + std::to_string(ds.num_frames()) + " night frames, fewer than train_split " +
                    std::to_string(ds.manifest.train_split));
  }
  validate_sequence(VideoSequence{ds.night, 25.0});
  const Image& first = ds.night.front();
  if (ds.reference.height() != first.height() || ds.reference.width() != first.width()) {
    throw DataError("reference and night frames differ in size");
  }

  ds.gt.assign(ds.night.size(), std::nullopt);
  if (ds.manifest.gt_dir) {
    for (const auto& [index, path] : list_frames(resolve(dataset_dir, *ds.manifest.gt_dir))) {
      if (index < 0 || index >= ds.num_frames()) continue;
      ds.gt[static_cast<std::size_t>(index)] = resize_mask(load_mask(path, index), first.height(), first.width());
    }
  }
  return ds;
}

void save_dataset(const fs::path& dataset_dir, const Dataset& ds) {
  fs::create_directories(dataset_dir);
  save_image(resolve(dataset_dir, ds.manifest.reference_path), ds.reference);
  for (int t = 0; t < ds.num_frames(); ++t) {
    save_image(resolve(dataset_dir, ds.manifest.night_dir) / frame_name(t), ds.night[static_cast<std::size_t>(t)]);
  }
  if (ds.manifest.gt_dir) {
    for (std::size_t t = 0; t < ds.gt.size(); ++t) {
      if (ds.gt[t]) save_mask(resolve(dataset_dir, *ds.manifest.gt_dir) / frame_name(static_cast<int>(t)), *ds.gt[t]);
    }
  }
  save_manifest(dataset_dir, ds.manifest);
}

}  // namespace n2d
