#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sslus/image.hpp"

namespace sslus {

enum class Split { Train, Val, Test };

std::string to_string(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::filesystem::path image_path;
  std::optional<std::filesystem::path> mask_path;
  Split split = Split::Train;
};

struct DatasetManifest {
  std::string name;
  std::vector<ManifestEntry> entries;

  /// (train, val, test)
  std::array<std::size_t, 3> split_counts() const;
  std::vector<ManifestEntry> entries_in(Split s) const;
};

struct SubsetSpec {
  double fraction = 1.0;
  std::uint64_t seed = 42;
};

/// Reads `image_path,mask_path,split` CSV. Relative paths resolve against the
/// manifest's directory. Throws ParseError (with line number) or IoError.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Keeps floor(fraction·|train|) train entries, picked as a prefix of one
/// seeded shuffle so that smaller fractions are subsets of larger ones.
/// Val/test entries pass through unchanged.
DatasetManifest take_train_subset(const DatasetManifest& manifest, const SubsetSpec& spec);
std::size_t subset_size(std::size_t n, double fraction);

/// Bilinear, half-pixel-centre sampling; result clipped to [0,1].
Image resize_image(const Image& img, int height, int width);
Mask resize_mask(const Mask& mask, int height, int width);

/// 8-bit PNG (1 or 3 channel). Gray inputs are replicated to 3 channels.
Image load_image(const std::filesystem::path& path, std::string id = {});
/// 8-bit PNG binarised at > 127.
Mask load_mask(const std::filesystem::path& path, std::string id = {});
void save_image_png(const std::filesystem::path& path, const Image& img);
void save_mask_png(const std::filesystem::path& path, const Mask& mask);
/// Writes a single-channel float plane scaled to 8 bits.
void save_plane_png(const std::filesystem::path& path, const std::vector<float>& plane, int h,
                    int w);

struct SyntheticSample {
  Image image;
  Mask mask;
};

/// Desk-scale stand-in for B-mode data: dark background, one elliptical
/// lesion, multiplicative speckle and a Gaussian blur. Sample i depends only
/// on (seed, i).
std::vector<SyntheticSample> generate_synthetic_dataset(int n, int height, int width,
                                                        std::uint64_t seed);

/// Writes images/masks as PNGs plus `manifest.csv` with a train/val/test split
/// given by the fractions (the remainder goes to test).
DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir,
                                        const std::vector<SyntheticSample>& samples,
                                        double train_fraction, double val_fraction);

/// Loaded dataset entry, resized to the working resolution.
struct Sample {
  Image image;
  std::optional<Mask> mask;
};

/// Loads and resizes to size×size (size <= 0 keeps the stored resolution).
std::vector<Sample> load_samples(const std::vector<ManifestEntry>& entries, int size,
                                 bool require_masks);

}  // namespace sslus
