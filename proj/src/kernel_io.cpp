#include "oocs/kernel_io.hpp"

#include <charconv>
#include <ostream>

#include "oocs/error.hpp"

namespace oocs {
namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

nlohmann::json kernel_to_json(const BalancedKernel& kernel) {
  using nlohmann::json;
  const int k = kernel.k();
  const int half = (k - 1) / 2;
  json weights = json::array();
  if (kernel.spec.dims == KernelDims::three) {
    for (int z = -half; z <= half; ++z) {
      json plane = json::array();
      for (int y = -half; y <= half; ++y) {
        json row = json::array();
        for (int x = -half; x <= half; ++x) row.push_back(kernel.at(z, y, x));
        plane.push_back(std::move(row));
      }
      weights.push_back(std::move(plane));
    }
  } else {
    for (int y = -half; y <= half; ++y) {
      json row = json::array();
      for (int x = -half; x <= half; ++x) row.push_back(kernel.at(0, y, x));
      weights.push_back(std::move(row));
    }
  }
  const auto& s = kernel.spec;
  const auto& d = kernel.derivation;
  return json{
      {"spec", {{"k", s.k}, {"gamma", s.gamma}, {"c", s.c}, {"dims", s.rank()}, {"oversample", s.oversample}}},
      {"derivation",
       {{"r_surround", d.r_surround},
        {"r_center", d.r_center},
        {"sigma", d.sigma},
        {"scale_pos", d.scale_pos},
        {"scale_neg", d.scale_neg}}},
      {"polarity", to_string(kernel.polarity)},
      {"weights", std::move(weights)},
  };
}

BalancedKernel kernel_from_json(const nlohmann::json& j) {
  try {
    BalancedKernel kernel;
    const auto& s = j.at("spec");
    kernel.spec.k = s.at("k").get<int>();
    kernel.spec.gamma = s.at("gamma").get<double>();
    kernel.spec.c = s.at("c").get<double>();
    const int dims = s.at("dims").get<int>();
    if (dims != 2 && dims != 3) throw DomainError("kernel dims must be 2 or 3");
    kernel.spec.dims = dims == 2 ? KernelDims::two : KernelDims::three;
    kernel.spec.oversample = s.value("oversample", 1);
    kernel.spec.validate();

    const auto& d = j.at("derivation");
    kernel.derivation.r_surround = d.at("r_surround").get<double>();
    kernel.derivation.r_center = d.at("r_center").get<double>();
    kernel.derivation.sigma = d.at("sigma").get<double>();
    kernel.derivation.scale_pos = d.at("scale_pos").get<double>();
    kernel.derivation.scale_neg = d.at("scale_neg").get<double>();

    const std::string polarity = j.at("polarity").get<std::string>();
    if (polarity != "on" && polarity != "off") throw DomainError("polarity must be 'on' or 'off'");
    kernel.polarity = polarity == "on" ? Polarity::on : Polarity::off;

    const int k = kernel.spec.k;
    kernel.weights.resize(kernel.spec.entries());
    Index idx = 0;
    const auto& w = j.at("weights");
    auto read_row = [&](const nlohmann::json& row) {
      if (!row.is_array() || static_cast<int>(row.size()) != k) throw DimensionError("kernel row has wrong length");
      for (const auto& v : row) kernel.weights[idx++] = v.get<double>();
    };
    if (!w.is_array() || static_cast<int>(w.size()) != k) throw DimensionError("kernel weights have wrong extent");
    for (const auto& outer : w) {
      if (dims == 3) {
        if (!outer.is_array() || static_cast<int>(outer.size()) != k) throw DimensionError("kernel plane has wrong extent");
        for (const auto& row : outer) read_row(row);
      } else {
        read_row(outer);
      }
    }
    return kernel;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed kernel JSON: ") + e.what());
  }
}

void write_kernel_csv(const BalancedKernel& kernel, std::ostream& out) {
  const int half = (kernel.k() - 1) / 2;
  out << "x,y,z,weight\n";
  const int z_lo = kernel.spec.dims == KernelDims::three ? -half : 0;
  const int z_hi = kernel.spec.dims == KernelDims::three ? half : 0;
  for (int z = z_lo; z <= z_hi; ++z)
    for (int y = -half; y <= half; ++y)
      for (int x = -half; x <= half; ++x)
        out << x << ',' << y << ',' << z << ',' << shortest(kernel.at(z, y, x)) << '\n';
}

}  // namespace oocs
