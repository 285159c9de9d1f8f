#pragma once

// Volume file I/O.
//
// MetaImage subset (.mha with LOCAL payload, or .mhd with a sibling raw
// file): ObjectType = Image, NDims = 3, little-endian, uncompressed,
// ElementType one of MET_FLOAT, MET_DOUBLE, MET_UCHAR, MET_SHORT. DimSize and
// ElementSpacing are written x y z. A MET_UCHAR file whose values are all 0
// or 1 loads as a BinaryMask.
//
// Raw + JSON: "<stem>.json" holds {"shape": [D, H, W], "spacing": [sz, sy, sx],
// "kind": "image" | "mask", "dtype": "float64", "byte_order": "little",
// "data_file": "<stem>.raw"}; the payload is little-endian float64.

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "oocs/tensor.hpp"

namespace oocs {

enum class ElementType { met_float, met_double, met_uchar, met_short };

std::string to_string(ElementType t);
ElementType parse_element_type(const std::string& name);

struct LoadedImage {
  std::variant<Volumed, BinaryMask> image;
  /// Non-fatal findings: skipped header keys, non-finite image values.
  std::vector<std::string> warnings;

  bool is_mask() const { return std::holds_alternative<BinaryMask>(image); }
  /// The image as a volume (masks convert to 0/1 doubles).
  Volumed volume() const;
  /// The image as a mask; a volume converts only if every value is 0 or 1.
  BinaryMask mask() const;
};

LoadedImage read_mha(const std::filesystem::path& path);
/// Header key order is fixed, so equal volumes give byte-identical files.
void write_mha(const Volumed& v, const std::filesystem::path& path, ElementType type = ElementType::met_double);
void write_mha(const BinaryMask& m, const std::filesystem::path& path);

LoadedImage read_raw_json(const std::filesystem::path& json_path);
void write_raw_json(const Volumed& v, const std::filesystem::path& json_path);
void write_raw_json(const BinaryMask& m, const std::filesystem::path& json_path);

/// Dispatch on extension: .mha/.mhd -> MetaImage, .json -> raw + JSON.
LoadedImage read_image(const std::filesystem::path& path);
void write_image(const Volumed& v, const std::filesystem::path& path, ElementType type = ElementType::met_double);
void write_image(const BinaryMask& m, const std::filesystem::path& path);

}  // namespace oocs
