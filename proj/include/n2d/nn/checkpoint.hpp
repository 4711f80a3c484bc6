#pragma once

#include <filesystem>

#include "n2d/nn/critic.hpp"
#include "n2d/nn/generator.hpp"

namespace n2d::nn {

/// Checkpoint file layout: 8-byte magic "N2DGANCK", little-endian uint32
/// version, little-endian uint64 header length, a JSON header (architecture
/// configuration and a tensor index), then raw little-endian float32 data.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Generator generator{nullptr};
  CriticSet critics{nullptr};
  Pathway pathway = Pathway::Both;  // pathway the generator was trained with
};

/// Writes generator and critic parameters plus normalisation statistics.
/// The file is replaced atomically.
void save_checkpoint(const std::filesystem::path& path, Generator& generator, CriticSet& critics,
                     Pathway pathway = Pathway::Both);

/// Architecture configuration stored in a checkpoint.
GeneratorConfig read_checkpoint_config(const std::filesystem::path& path);

/// Rebuilds both networks from the stored configuration.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Loads into existing networks; throws ShapeError when the stored
/// configuration differs from the generator's.
void load_checkpoint_into(const std::filesystem::path& path, Generator& generator, CriticSet& critics);

}  // namespace n2d::nn
