#include "oocs/volio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "oocs/error.hpp"

namespace oocs {
namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "payload codecs assume a little-endian host");

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t element_size(ElementType t) {
  switch (t) {
    case ElementType::met_float: return 4;
    case ElementType::met_double: return 8;
    case ElementType::met_uchar: return 1;
    case ElementType::met_short: return 2;
  }
  return 0;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

template <typename T>
T load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void store(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

Eigen::ArrayXd decode(const std::string& bytes, std::size_t offset, Index count, ElementType t) {
  Eigen::ArrayXd out(count);
  const char* p = bytes.data() + offset;
  const std::size_t step = element_size(t);
  for (Index i = 0; i < count; ++i, p += step) {
    switch (t) {
      case ElementType::met_float: out[i] = load<float>(p); break;
      case ElementType::met_double: out[i] = load<double>(p); break;
      case ElementType::met_uchar: out[i] = load<std::uint8_t>(p); break;
      case ElementType::met_short: out[i] = load<std::int16_t>(p); break;
    }
  }
  return out;
}

template <typename Int>
Int narrow_integer(double v) {
  const double r = std::nearbyint(v);
  if (!std::isfinite(v) || r < std::numeric_limits<Int>::min() || r > std::numeric_limits<Int>::max())
    throw RangeError("value " + shortest(v) + " does not fit the requested element type");
  return static_cast<Int>(r);
}

std::string encode(const Eigen::ArrayXd& data, ElementType t) {
  std::string out;
  out.reserve(static_cast<std::size_t>(data.size()) * element_size(t));
  for (Index i = 0; i < data.size(); ++i) {
    const double v = data[i];
    switch (t) {
      case ElementType::met_float:
        if (std::isfinite(v) && std::abs(v) > std::numeric_limits<float>::max())
          throw RangeError("value " + shortest(v) + " overflows MET_FLOAT");
        store(out, static_cast<float>(v));
        break;
      case ElementType::met_double: store(out, v); break;
      case ElementType::met_uchar: store(out, narrow_integer<std::uint8_t>(v)); break;
      case ElementType::met_short: store(out, narrow_integer<std::int16_t>(v)); break;
    }
  }
  return out;
}

bool is_binary(const Eigen::ArrayXd& data) { return ((data == 0.0) || (data == 1.0)).all(); }

LoadedImage finish(Shape3 shape, const Spacing& spacing, Eigen::ArrayXd data, bool as_mask,
                   std::vector<std::string> warnings, const fs::path& path) {
  LoadedImage out;
  out.warnings = std::move(warnings);
  if (as_mask) {
    if (!data.allFinite()) throw CorruptFileError("'" + path.string() + "': mask payload contains NaN/Inf");
    if (!is_binary(data)) throw CorruptFileError("'" + path.string() + "': mask payload is not binary");
    out.image = BinaryMask(shape, spacing, data.cast<std::uint8_t>());
  } else {
    if (!data.allFinite()) out.warnings.push_back("'" + path.string() + "': image contains non-finite values");
    out.image = Volumed(shape, spacing, std::move(data));
  }
  return out;
}

std::vector<double> parse_numbers(const std::string& key, const std::string& value, std::size_t expected) {
  std::istringstream in(value);
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
      throw CorruptFileError("malformed number '" + token + "' in " + key);
    out.push_back(v);
  }
  if (out.size() != expected)
    throw CorruptFileError(key + " needs " + std::to_string(expected) + " values, got " + std::to_string(out.size()));
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "True" || value == "true" || value == "1") return true;
  if (value == "False" || value == "false" || value == "0") return false;
  throw CorruptFileError("malformed boolean for " + key + ": '" + value + "'");
}

const std::set<std::string>& ignored_keys() {
  static const std::set<std::string> keys = {
      "Comment",          "ObjectSubType",   "TransformType", "Offset",        "Origin",
      "Position",         "TransformMatrix", "Rotation",      "Orientation",   "CenterOfRotation",
      "AnatomicalOrientation", "Name",       "ID",            "ParentID",      "Color",
      "ElementMin",       "ElementMax"};
  return keys;
}

std::string header_text(Shape3 shape, const Spacing& spacing, ElementType type, const std::string& data_file) {
  std::string h;
  h += "ObjectType = Image\n";
  h += "NDims = 3\n";
  h += "BinaryData = True\n";
  h += "BinaryDataByteOrderMSB = False\n";
  h += "CompressedData = False\n";
  h += "ElementSpacing = " + shortest(spacing[2]) + " " + shortest(spacing[1]) + " " + shortest(spacing[0]) + "\n";
  h += "DimSize = " + std::to_string(shape.w) + " " + std::to_string(shape.h) + " " + std::to_string(shape.d) + "\n";
  h += "ElementType = " + to_string(type) + "\n";
  h += "ElementDataFile = " + data_file + "\n";
  return h;
}

void write_mha_impl(const Eigen::ArrayXd& data, Shape3 shape, const Spacing& spacing, const fs::path& path,
                    ElementType type) {
  const std::string payload = encode(data, type);
  const std::string ext = path.extension().string();
  if (ext == ".mhd") {
    fs::path raw = path;
    raw.replace_extension(".raw");
    write_file(raw, payload);
    write_file(path, header_text(shape, spacing, type, raw.filename().string()));
  } else {
    write_file(path, header_text(shape, spacing, type, "LOCAL") + payload);
  }
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

std::string to_string(ElementType t) {
  switch (t) {
    case ElementType::met_float: return "MET_FLOAT";
    case ElementType::met_double: return "MET_DOUBLE";
    case ElementType::met_uchar: return "MET_UCHAR";
    case ElementType::met_short: return "MET_SHORT";
  }
  return "MET_UNKNOWN";
}

ElementType parse_element_type(const std::string& name) {
  if (name == "MET_FLOAT" || name == "float") return ElementType::met_float;
  if (name == "MET_DOUBLE" || name == "double") return ElementType::met_double;
  if (name == "MET_UCHAR" || name == "uchar") return ElementType::met_uchar;
  if (name == "MET_SHORT" || name == "short") return ElementType::met_short;
  throw UnsupportedFormatError("unsupported ElementType '" + name + "'");
}

Volumed LoadedImage::volume() const {
  if (const auto* m = std::get_if<BinaryMask>(&image)) return m->to_volume();
  return std::get<Volumed>(image);
}

BinaryMask LoadedImage::mask() const {
  if (const auto* m = std::get_if<BinaryMask>(&image)) return *m;
  const auto& v = std::get<Volumed>(image);
  if (!is_binary(v.array())) throw DomainError("image is not binary and cannot be used as a mask");
  return BinaryMask(v.shape(), v.spacing(), v.array().cast<std::uint8_t>());
}

LoadedImage read_mha(const fs::path& path) {
  const std::string bytes = read_file(path);
  std::vector<std::string> warnings;
  std::size_t pos = 0;
  std::string object_type, data_file;
  std::optional<int> ndims;
  std::vector<double> dims, spacing;
  std::optional<ElementType> type;
  bool found_data_file = false;

  while (pos < bytes.size() && !found_data_file) {
    const std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string::npos) throw CorruptFileError("'" + path.string() + "': header ends without ElementDataFile");
    const std::string line = trim(bytes.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CorruptFileError("'" + path.string() + "': malformed header line '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "ObjectType") {
      object_type = value;
    } else if (key == "NDims") {
      ndims = static_cast<int>(parse_numbers(key, value, 1)[0]);
    } else if (key == "DimSize") {
      dims = parse_numbers(key, value, 3);
    } else if (key == "ElementSpacing" || key == "ElementSize") {
      if (key == "ElementSpacing" || spacing.empty()) spacing = parse_numbers(key, value, 3);
    } else if (key == "ElementType") {
      type = parse_element_type(value);
    } else if (key == "CompressedData") {
      if (parse_bool(key, value)) throw UnsupportedFormatError("'" + path.string() + "': compressed payloads are not supported");
    } else if (key == "BinaryData") {
      if (!parse_bool(key, value)) throw UnsupportedFormatError("'" + path.string() + "': ASCII payloads are not supported");
    } else if (key == "BinaryDataByteOrderMSB" || key == "ElementByteOrderMSB") {
      if (parse_bool(key, value)) throw UnsupportedFormatError("'" + path.string() + "': big-endian payloads are not supported");
    } else if (key == "ElementNumberOfChannels") {
      if (parse_numbers(key, value, 1)[0] != 1.0)
        throw UnsupportedFormatError("'" + path.string() + "': multi-channel images are not supported");
    } else if (key == "CompressedDataSize" || key == "HeaderSize") {
      warnings.push_back("ignoring header key " + key);
    } else if (key == "ElementDataFile") {
      data_file = value;
      found_data_file = true;
    } else if (ignored_keys().count(key) == 0) {
      warnings.push_back("unknown header key '" + key + "' skipped");
    }
  }

  if (!found_data_file) throw CorruptFileError("'" + path.string() + "': missing ElementDataFile");
  if (object_type != "Image") throw UnsupportedFormatError("'" + path.string() + "': ObjectType must be Image");
  if (ndims != 3) throw UnsupportedFormatError("'" + path.string() + "': only NDims = 3 is supported");
  if (dims.empty() || !type) throw CorruptFileError("'" + path.string() + "': missing DimSize or ElementType");
  if (spacing.empty()) spacing = {1.0, 1.0, 1.0};
  for (double d : dims)
    if (d < 1 || d != std::floor(d)) throw CorruptFileError("'" + path.string() + "': invalid DimSize");

  const Shape3 shape{static_cast<Index>(dims[2]), static_cast<Index>(dims[1]), static_cast<Index>(dims[0])};
  const Spacing sp(spacing[2], spacing[1], spacing[0]);
  if (!sp.allFinite() || (sp.array() <= 0.0).any())
    throw CorruptFileError("'" + path.string() + "': ElementSpacing must be positive");

  std::string external;
  const std::string* payload = &bytes;
  std::size_t offset = pos;
  if (data_file != "LOCAL") {
    if (data_file == "LIST" || data_file.find('%') != std::string::npos)
      throw UnsupportedFormatError("'" + path.string() + "': multi-file payloads are not supported");
    external = read_file(path.parent_path() / data_file);
    payload = &external;
    offset = 0;
  }
  const std::size_t expected = static_cast<std::size_t>(shape.voxels()) * element_size(*type);
  if (payload->size() - offset != expected)
    throw CorruptFileError("'" + path.string() + "': payload has " + std::to_string(payload->size() - offset) +
                           " bytes, DimSize and ElementType need " + std::to_string(expected));

  Eigen::ArrayXd data = decode(*payload, offset, shape.voxels(), *type);
  const bool as_mask = *type == ElementType::met_uchar && is_binary(data);
  return finish(shape, sp, std::move(data), as_mask, std::move(warnings), path);
}

void write_mha(const Volumed& v, const fs::path& path, ElementType type) {
  write_mha_impl(v.array(), v.shape(), v.spacing(), path, type);
}

void write_mha(const BinaryMask& m, const fs::path& path) {
  write_mha_impl(m.array().cast<double>(), m.shape(), m.spacing(), path, ElementType::met_uchar);
}

LoadedImage read_raw_json(const fs::path& json_path) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(json_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw CorruptFileError("'" + json_path.string() + "': " + e.what());
  }
  try {
    const auto shape_v = meta.at("shape").get<std::vector<Index>>();
    const auto spacing_v = meta.at("spacing").get<std::vector<double>>();
    const std::string kind = meta.at("kind").get<std::string>();
    if (meta.value("dtype", "float64") != "float64")
      throw UnsupportedFormatError("'" + json_path.string() + "': only float64 payloads are supported");
    if (meta.value("byte_order", "little") != "little")
      throw UnsupportedFormatError("'" + json_path.string() + "': only little-endian payloads are supported");
    if (shape_v.size() != 3 || spacing_v.size() != 3)
      throw CorruptFileError("'" + json_path.string() + "': shape and spacing need three entries");
    if (kind != "image" && kind != "mask") throw CorruptFileError("'" + json_path.string() + "': unknown kind " + kind);
    fs::path raw = json_path;
    raw.replace_extension(".raw");
    if (meta.contains("data_file")) raw = json_path.parent_path() / meta.at("data_file").get<std::string>();

    const Shape3 shape{shape_v[0], shape_v[1], shape_v[2]};
    if (shape.d < 1 || shape.h < 1 || shape.w < 1) throw CorruptFileError("'" + json_path.string() + "': invalid shape");
    const Spacing sp(spacing_v[0], spacing_v[1], spacing_v[2]);
    if (!sp.allFinite() || (sp.array() <= 0.0).any())
      throw CorruptFileError("'" + json_path.string() + "': spacing must be positive");

    const std::string bytes = read_file(raw);
    const std::size_t expected = static_cast<std::size_t>(shape.voxels()) * 8;
    if (bytes.size() != expected)
      throw CorruptFileError("'" + raw.string() + "': payload has " + std::to_string(bytes.size()) + " bytes, shape needs " +
                             std::to_string(expected));
    return finish(shape, sp, decode(bytes, 0, shape.voxels(), ElementType::met_double), kind == "mask", {}, json_path);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError("'" + json_path.string() + "': " + e.what());
  }
}

namespace {

void write_raw_json_impl(const Eigen::ArrayXd& data, Shape3 shape, const Spacing& spacing, const std::string& kind,
                         const fs::path& json_path) {
  fs::path raw = json_path;
  raw.replace_extension(".raw");
  const nlohmann::ordered_json meta = {
      {"shape", {shape.d, shape.h, shape.w}},
      {"spacing", {spacing[0], spacing[1], spacing[2]}},
      {"kind", kind},
      {"dtype", "float64"},
      {"byte_order", "little"},
      {"data_file", raw.filename().string()},
  };
  write_file(raw, encode(data, ElementType::met_double));
  write_file(json_path, meta.dump(2) + "\n");
}

}  // namespace

void write_raw_json(const Volumed& v, const fs::path& json_path) {
  write_raw_json_impl(v.array(), v.shape(), v.spacing(), "image", json_path);
}

void write_raw_json(const BinaryMask& m, const fs::path& json_path) {
  write_raw_json_impl(m.array().cast<double>(), m.shape(), m.spacing(), "mask", json_path);
}

LoadedImage read_image(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".mha" || ext == ".mhd") return read_mha(path);
  if (ext == ".json") return read_raw_json(path);
  throw UnsupportedFormatError("unrecognized volume extension '" + ext + "' (expected .mha, .mhd or .json)");
}

void write_image(const Volumed& v, const fs::path& path, ElementType type) {
  const std::string ext = lower_extension(path);
  if (ext == ".mha" || ext == ".mhd") return write_mha(v, path, type);
  if (ext == ".json") {
    if (type != ElementType::met_double) throw UnsupportedFormatError("raw+json payloads are always float64");
    return write_raw_json(v, path);
  }
  throw UnsupportedFormatError("unrecognized volume extension '" + ext + "' (expected .mha, .mhd or .json)");
}

void write_image(const BinaryMask& m, const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".mha" || ext == ".mhd") return write_mha(m, path);
  if (ext == ".json") return write_raw_json(m, path);
  throw UnsupportedFormatError("unrecognized volume extension '" + ext + "' (expected .mha, .mhd or .json)");
}

}  // namespace oocs
