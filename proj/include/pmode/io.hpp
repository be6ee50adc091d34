#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pmode/mixture.hpp"

namespace pmode {

struct CsvOptions {
  // Treat the last column as an integer class label instead of a feature.
  bool label_column = false;
};

// Comma-separated numeric rows; a first row that does not parse as numbers
// is taken as a header. Errors name the offending line.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

inline constexpr std::size_t kCifarPixels = 3072;
inline constexpr std::size_t kCifarRecordBytes = 1 + kCifarPixels;
inline constexpr int kCifarClasses = 10;

// One CIFAR-10 binary batch: label byte then 3072 channel-planar pixel bytes
// per record. Pixels are scaled to [0, 1].
Dataset read_cifar_batch(const std::filesystem::path& path);

struct CifarSplit {
  Dataset train;          // training records of the nominal class
  Dataset test_nominal;   // test records of the nominal class
  Dataset test_anomalous; // every other test record
};

// Reads data_batch_{1..5}.bin (those present, at least one) and test_batch.bin.
CifarSplit load_cifar10(const std::filesystem::path& dir, int class_label);

nlohmann::json mixture_to_json(const MixtureDensity& mix);
MixtureDensity mixture_from_json(const nlohmann::json& j);

} // namespace pmode
