#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "n2d/core/image.hpp"

namespace n2d {

/// On-disk description of one surveillance sequence. Paths are relative to the
/// directory holding manifest.json unless absolute.
struct DatasetManifest {
  std::string name;
  std::string reference_path = "reference.png";
  std::string night_dir = "night";
  std::optional<std::string> gt_dir;
  int train_split = 300;
};

DatasetManifest load_manifest(const std::filesystem::path& dataset_dir);
void save_manifest(const std::filesystem::path& dataset_dir, const DatasetManifest& manifest);

/// A dataset held in memory. Frames are indexed by their file ordinal; the
/// first `train_split` frames form the training split.
struct Dataset {
  DatasetManifest manifest;
  Image reference;
  std::vector<Image> night;
  std::vector<std::optional<Mask>> gt;  // same length as night when present

  int train_split() const { return manifest.train_split; }
  int num_frames() const { return static_cast<int>(night.size()); }
  std::vector<Image> train_frames() const;
  std::vector<Image> test_frames() const;
};

/// Loads reference, night frames and (optional) ground truth. Images whose
/// sides are not powers of two are resized to 256x256.
Dataset load_dataset(const std::filesystem::path& dataset_dir);

/// Writes the dataset in the manifest layout: reference.png, night/, gt/ and
/// manifest.json.
void save_dataset(const std::filesystem::path& dataset_dir, const Dataset& dataset);

/// Resize rule applied at ingestion.
Image normalize_ingest_size(const Image& img);

}  // namespace n2d
