// oocs: command-line front end for kernel export, On/Off filtering,
// preprocessing, perturbation, evaluation and gradient checks.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric error
// (including a failed gradient check).

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "oocs/conv.hpp"
#include "oocs/gradcheck.hpp"
#include "oocs/kernel.hpp"
#include "oocs/kernel_io.hpp"
#include "oocs/metrics.hpp"
#include "oocs/parallel.hpp"
#include "oocs/perturb.hpp"
#include "oocs/preprocess.hpp"
#include "oocs/volio.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

std::shared_ptr<spdlog::logger> logger() {
  static auto log = spdlog::stderr_logger_mt("oocs");
  return log;
}

oocs::LoadedImage load(const std::string& path) {
  oocs::LoadedImage img = oocs::read_image(path);
  for (const auto& w : img.warnings) logger()->warn("{}", w);
  return img;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

oocs::Padding parse_padding(const std::string& s) {
  if (s == "same") return oocs::Padding::same_zero;
  if (s == "valid") return oocs::Padding::valid;
  throw oocs::ConfigError("padding must be 'same' or 'valid'");
}

// --- kernel -----------------------------------------------------------------

struct KernelArgs {
  int k = 3;
  double gamma = 2.0 / 3.0;
  double c = 3.0;
  int dims = 3;
  std::string polarity = "on";
  int oversample = 1;
  std::string out = "-";
  std::string format = "json";
};

int run_kernel(const KernelArgs& a) {
  oocs::KernelSpec spec;
  spec.k = a.k;
  spec.gamma = a.gamma;
  spec.c = a.c;
  spec.dims = a.dims == 2 ? oocs::KernelDims::two : oocs::KernelDims::three;
  spec.oversample = a.oversample;
  spec.validate();
  const oocs::BalancedKernel kernel =
      oocs::make_kernel(spec, a.polarity == "on" ? oocs::Polarity::on : oocs::Polarity::off);

  std::ostringstream text;
  if (a.format == "json")
    text << oocs::kernel_to_json(kernel).dump(2) << '\n';
  else
    oocs::write_kernel_csv(kernel, text);

  if (a.out == "-") {
    std::cout << text.str();
  } else {
    std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
    if (!f) throw oocs::IoError("cannot open '" + a.out + "' for writing");
    f << text.str();
  }
  logger()->info("k={} sigma={} scale_pos={} scale_neg={}", spec.k, kernel.derivation.sigma,
                 kernel.derivation.scale_pos, kernel.derivation.scale_neg);
  return 0;
}

// --- filter -----------------------------------------------------------------

struct FilterArgs {
  std::string in, out_on, out_off;
  int k = 3;
  double gamma = 2.0 / 3.0;
  double c = 3.0;
  std::string padding = "same";
};

int run_filter(const FilterArgs& a) {
  oocs::KernelSpec spec = oocs::preset_spec(a.k);
  spec.gamma = a.gamma;
  spec.c = a.c;
  spec.validate();
  const oocs::Padding padding = parse_padding(a.padding);

  const oocs::Volumed v = load(a.in).volume();
  const auto input = oocs::FeatureMapd::from_volume(v);
  const auto on = oocs::conv3d_forward(input, oocs::to_conv_weights(oocs::make_kernel(spec, oocs::Polarity::on)), padding);
  const auto off = oocs::conv3d_forward(input, oocs::to_conv_weights(oocs::make_kernel(spec, oocs::Polarity::off)), padding);
  oocs::write_image(on.to_volume(0, v.spacing()), a.out_on);
  oocs::write_image(off.to_volume(0, v.spacing()), a.out_off);
  return 0;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> pred, ref, case_id;
  std::string csv_out = "-";
};

int run_eval(const EvalArgs& a) {
  if (a.pred.size() != a.ref.size()) throw oocs::ConfigError("--pred and --ref need the same number of files");
  if (!a.case_id.empty() && a.case_id.size() != a.pred.size())
    throw oocs::ConfigError("--case-id needs one id per --pred file");

  std::ostringstream csv;
  csv << "case_id,dsc,hsd_mm\n";
  for (std::size_t i = 0; i < a.pred.size(); ++i) {
    const std::string id = a.case_id.empty() ? std::filesystem::path(a.pred[i]).stem().string() : a.case_id[i];
    const oocs::BinaryMask pred = load(a.pred[i]).mask();
    const oocs::BinaryMask ref = load(a.ref[i]).mask();
    const double dsc = oocs::dice(pred, ref);
    std::string hsd;
    try {
      hsd = number(oocs::hausdorff_mm(pred, ref));
    } catch (const oocs::UndefinedDistanceError& e) {
      logger()->warn("{}: {}", id, e.what());
      hsd = "undefined";
    }
    csv << csv_field(id) << ',' << number(dsc) << ',' << hsd << '\n';
  }
  if (a.csv_out == "-") {
    std::cout << csv.str();
  } else {
    std::ofstream f(a.csv_out, std::ios::binary | std::ios::trunc);
    if (!f) throw oocs::IoError("cannot open '" + a.csv_out + "' for writing");
    f << csv.str();
  }
  return 0;
}

// --- perturb ----------------------------------------------------------------

struct PerturbArgs {
  std::string in, out, kind;
  double sigma = 1.0;
  int n = 5;
  std::optional<std::uint64_t> seed;
  double max_rot = 10.0;
  double max_trans = 10.0;
};

int run_perturb(const PerturbArgs& a, std::uint64_t global_seed) {
  oocs::PerturbSpec spec;
  spec.kind = oocs::parse_perturb_kind(a.kind);
  spec.sigma = a.sigma;
  spec.n_transforms = a.n;
  spec.seed = a.seed.value_or(global_seed);
  spec.motion_max_rot = a.max_rot;
  spec.motion_max_trans = a.max_trans;
  spec.validate();
  const oocs::Volumed v = load(a.in).volume();
  oocs::write_image(oocs::apply(spec, v), a.out);
  return 0;
}

// --- preprocess -------------------------------------------------------------

struct PreprocessArgs {
  std::string in, out;
  std::vector<double> spacing{0.6, 0.6, 0.6};
  std::vector<oocs::Index> crop;
  bool zscore = false;
  bool mask = false;
};

int run_preprocess(const PreprocessArgs& a) {
  if (a.spacing.size() != 3) throw oocs::ConfigError("--spacing needs three values (x y z)");
  if (!a.crop.empty() && a.crop.size() != 3) throw oocs::ConfigError("--crop needs three values (x y z)");
  const oocs::Spacing target(a.spacing[2], a.spacing[1], a.spacing[0]);
  oocs::validate_spacing(target);
  std::optional<oocs::Shape3> crop;
  if (!a.crop.empty()) {
    crop = oocs::Shape3{a.crop[2], a.crop[1], a.crop[0]};
    oocs::validate_shape(*crop);
  }
  if (a.mask && a.zscore) throw oocs::ConfigError("--zscore does not apply to masks");

  const oocs::LoadedImage img = load(a.in);
  if (a.mask || img.is_mask()) {
    oocs::BinaryMask m = oocs::resample(img.mask(), target);
    if (crop) m = oocs::crop_or_pad(m, *crop);
    oocs::write_image(m, a.out);
    return 0;
  }
  oocs::Volumed v = oocs::resample(img.volume(), oocs::ResampleSpec{target, oocs::Interpolation::trilinear});
  if (a.zscore) v = oocs::zscore(v);
  if (crop) v = oocs::crop_or_pad(v, *crop);
  oocs::write_image(v, a.out);
  return 0;
}

// --- gradcheck --------------------------------------------------------------

struct GradcheckArgs {
  int seeds = 20;
  double tolerance = 1e-5;
  oocs::Index max_entries = 32;
};

int run_gradcheck(const GradcheckArgs& a, std::uint64_t seed) {
  oocs::GradcheckOptions opts;
  opts.tolerance = a.tolerance;
  opts.max_entries = a.max_entries;
  opts.seed = seed;

  std::vector<oocs::GradcheckResult> rows;
  for (int s = 0; s < a.seeds; ++s) {
    opts.seed = seed + static_cast<std::uint64_t>(s);
    rows.push_back(oocs::check_conv(2, 3, 3, {4, 5, 6}, oocs::Padding::same_zero, opts));
    rows.push_back(oocs::check_conv(2, 3, 3, {4, 5, 6}, oocs::Padding::valid, opts));
    for (const char* which : {"bce", "dice", "bce_dice"}) rows.push_back(oocs::check_loss(which, {4, 4, 4}, opts));
  }
  opts.seed = seed;
  for (auto& r : oocs::block_gradcheck_grid(a.seeds, opts)) rows.push_back(std::move(r));

  bool all = true;
  std::cout << std::left << std::setw(58) << "check" << std::setw(14) << "max_rel_err" << std::setw(9) << "entries"
            << std::setw(8) << "kinks" << "result\n";
  for (const auto& r : rows) {
    all = all && r.pass;
    std::cout << std::left << std::setw(58) << r.name << std::setw(14) << std::scientific << std::setprecision(3)
              << r.max_rel_error << std::defaultfloat << std::setw(9) << r.checked << std::setw(8) << r.skipped
              << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  std::cout << (all ? "all gradient checks passed" : "gradient check FAILED") << " (tolerance " << a.tolerance
            << ")\n";
  return all ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D On/Off center-surround kernels and volumetric evaluation tools"};
  app.require_subcommand(1);

  int threads = 0;
  std::uint64_t seed = 0;
  std::string log_level = "warn";
  app.add_option("--threads", threads, "Worker threads (default: OOCS_THREADS or 1)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "Default seed for seeded operations");
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  KernelArgs ka;
  auto* kernel = app.add_subcommand("kernel", "Write a balanced On/Off DoG kernel");
  kernel->add_option("--k", ka.k, "Kernel size (odd, >= 3)");
  kernel->add_option("--gamma", ka.gamma, "Center/surround radius ratio in (0, 1)");
  kernel->add_option("--c", ka.c, "Balance constant (>= 1)");
  kernel->add_option("--dims", ka.dims, "2 or 3")->check(CLI::IsMember({2, 3}));
  kernel->add_option("--polarity", ka.polarity, "on|off")->check(CLI::IsMember({"on", "off"}));
  kernel->add_option("--oversample", ka.oversample, "Sub-samples per voxel and axis");
  kernel->add_option("--out", ka.out, "Output file, '-' for stdout");
  kernel->add_option("--format", ka.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

  FilterArgs fa;
  auto* filter = app.add_subcommand("filter", "Write the On and Off responses of a volume");
  filter->add_option("--in", fa.in, "Input volume")->required();
  filter->add_option("--out-on", fa.out_on, "On response output")->required();
  filter->add_option("--out-off", fa.out_off, "Off response output")->required();
  filter->add_option("--k", fa.k, "Kernel size");
  filter->add_option("--gamma", fa.gamma, "Center/surround radius ratio");
  filter->add_option("--c", fa.c, "Balance constant");
  filter->add_option("--padding", fa.padding, "same|valid")->check(CLI::IsMember({"same", "valid"}));

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Dice and Hausdorff distance of predicted vs reference masks");
  eval->add_option("--pred", ea.pred, "Predicted mask(s)")->required();
  eval->add_option("--ref", ea.ref, "Reference mask(s)")->required();
  eval->add_option("--case-id", ea.case_id, "Case id per pair (default: prediction file stem)");
  eval->add_option("--csv-out", ea.csv_out, "CSV output, '-' for stdout");

  PerturbArgs pa;
  auto* perturb = app.add_subcommand("perturb", "Apply a blur, noise or motion perturbation");
  perturb->add_option("--in", pa.in, "Input volume")->required();
  perturb->add_option("--out", pa.out, "Output volume")->required();
  perturb->add_option("--kind", pa.kind, "gaussian_blur|gaussian_noise|motion")
      ->required()
      ->check(CLI::IsMember({"gaussian_blur", "blur", "gaussian_noise", "noise", "motion"}));
  perturb->add_option("--sigma", pa.sigma, "Blur std (voxels) or noise std (intensity units)");
  perturb->add_option("--n", pa.n, "Number of motion transforms");
  perturb->add_option("--seed", pa.seed, "Seed (default: global --seed)");
  perturb->add_option("--max-rot", pa.max_rot, "Motion rotation bound, degrees");
  perturb->add_option("--max-trans", pa.max_trans, "Motion translation bound, mm");

  PreprocessArgs pp;
  auto* preprocess = app.add_subcommand("preprocess", "Resample, normalize and crop a volume");
  preprocess->add_option("--in", pp.in, "Input volume")->required();
  preprocess->add_option("--out", pp.out, "Output volume")->required();
  preprocess->add_option("--spacing", pp.spacing, "Target spacing x y z (mm)")->expected(3);
  preprocess->add_option("--crop", pp.crop, "Center crop/pad to x y z voxels")->expected(3);
  preprocess->add_flag("--zscore", pp.zscore, "Z-score normalize after resampling");
  preprocess->add_flag("--mask", pp.mask, "Treat input as a mask (nearest neighbour)");

  GradcheckArgs ga;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of all analytic gradients");
  gradcheck->add_option("--seeds", ga.seeds, "Seeds per configuration")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tolerance", ga.tolerance, "Max relative error");
  gradcheck->add_option("--max-entries", ga.max_entries, "Entries probed per tensor (0 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  logger()->set_level(spdlog::level::from_str(log_level));
  if (threads > 0) oocs::set_num_threads(threads);

  try {
    if (*kernel) return run_kernel(ka);
    if (*filter) return run_filter(fa);
    if (*eval) return run_eval(ea);
    if (*perturb) return run_perturb(pa, seed);
    if (*preprocess) return run_preprocess(pp);
    if (*gradcheck) return run_gradcheck(ga, seed);
  } catch (const oocs::ConfigError& e) {
    logger()->error("{}", e.what());
    return kExitConfig;
  } catch (const oocs::IoError& e) {
    logger()->error("{}", e.what());
    return kExitIo;
  } catch (const oocs::NumericError& e) {
    logger()->error("{}", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    logger()->error("{}", e.what());
    return 1;
  }
  return 0;
}
