#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "featdistill/distortion.hpp"
#include "featdistill/distortion_ops.hpp"
#include "featdistill/errors.hpp"

namespace featdistill {

namespace {

// One parameter cell of a severity row. Values are drawn uniformly from
// [lo, hi] (rounded for integer parameters); signed cells reflect the draw
// about `center` with a fair coin.
struct Cell {
  double lo;
  double hi;
  bool integer = false;
  bool signed_about_center = false;
  double center = 0.0;
  double nominal_override = std::nan("");
};

Cell range(double lo, double hi) { return {lo, hi}; }
Cell int_range(double lo, double hi) { return {lo, hi, true}; }
Cell int_fixed(double nominal, double lo, double hi) { return {lo, hi, true, false, 0.0, nominal}; }
Cell signed_range(double center, double lo_dev, double hi_dev) {
  return {lo_dev, hi_dev, false, true, center};
}

using Row = std::vector<Cell>;

struct Entry {
  OperatorInfo info;
  std::array<Row, 5> table;
  std::optional<ParamMap> identity;
};

ParamMap make_params(const std::vector<std::string_view>& names, std::initializer_list<double> v) {
  ParamMap m;
  auto it = v.begin();
  for (auto n : names) m.emplace(std::string(n), *it++);
  return m;
}

std::vector<Entry> build_catalog() {
  using C = Category;
  using O = Operator;
  std::vector<Entry> e;
  auto add = [&](O op, std::string_view name, Catalog cat, C category,
                 std::vector<std::string_view> params, bool resampling, std::array<Row, 5> table,
                 std::optional<std::initializer_list<double>> identity) {
    Entry entry{{op, name, cat, category, params, resampling}, std::move(table), std::nullopt};
    if (identity) entry.identity = make_params(params, *identity);
    e.push_back(std::move(entry));
  };
  const auto X = Catalog::Extended;
  const auto F = Catalog::Official;
  const Cell angle = range(0.0, 180.0);

  // ---- blur
  add(O::GaussianBlur, "gaussian_blur", X, C::Blur, {"sigma"}, false,
      {{{range(0.5, 0.8)}, {range(0.9, 1.3)}, {range(1.4, 1.9)}, {range(2.0, 2.7)}, {range(2.8, 3.6)}}},
      {{0.0}});
  add(O::MotionBlur, "motion_blur", X, C::Blur, {"length", "angle"}, false,
      {{{int_range(3, 3), angle}, {int_range(5, 5), angle}, {int_range(7, 9), angle},
        {int_range(11, 13), angle}, {int_range(15, 19), angle}}},
      {{1.0, 0.0}});
  add(O::DefocusBlur, "defocus_blur", X, C::Blur, {"radius"}, false,
      {{{range(0.8, 1.2)}, {range(1.5, 2.0)}, {range(2.5, 3.0)}, {range(3.5, 4.5)}, {range(5.0, 6.0)}}},
      {{0.0}});
  add(O::AtmosphericBlur, "atmospheric_blur", X, C::Blur, {"sigma"}, false,
      {{{range(0.4, 0.6)}, {range(0.7, 1.0)}, {range(1.1, 1.5)}, {range(1.6, 2.2)}, {range(2.3, 3.0)}}},
      {{0.0}});
  add(O::ZoomBlur, "zoom_blur", X, C::Blur, {"strength"}, false,
      {{{range(0.01, 0.02)}, {range(0.03, 0.04)}, {range(0.05, 0.07)}, {range(0.08, 0.11)},
        {range(0.12, 0.16)}}},
      {{0.0}});
  // ---- noise
  add(O::GaussianNoise, "gaussian_noise", X, C::Noise, {"sigma"}, false,
      {{{range(0.01, 0.03)}, {range(0.03, 0.05)}, {range(0.05, 0.08)}, {range(0.08, 0.12)},
        {range(0.12, 0.18)}}},
      {{0.0}});
  add(O::PoissonNoise, "poisson_noise", X, C::Noise, {"scale"}, false,
      {{{range(0.002, 0.004)}, {range(0.005, 0.008)}, {range(0.01, 0.016)}, {range(0.02, 0.032)},
        {range(0.04, 0.064)}}},
      {{0.0}});
  add(O::IsoNoise, "iso_noise", X, C::Noise, {"sigma"}, false,
      {{{range(0.02, 0.04)}, {range(0.05, 0.07)}, {range(0.08, 0.11)}, {range(0.12, 0.16)},
        {range(0.18, 0.24)}}},
      {{0.0}});
  add(O::SaltPepper, "salt_pepper", X, C::Noise, {"amount"}, false,
      {{{range(0.002, 0.004)}, {range(0.006, 0.01)}, {range(0.012, 0.02)}, {range(0.025, 0.04)},
        {range(0.05, 0.08)}}},
      {{0.0}});
  add(O::BandingNoise, "banding_noise", X, C::Noise, {"amplitude"}, false,
      {{{range(0.005, 0.01)}, {range(0.012, 0.02)}, {range(0.025, 0.035)}, {range(0.04, 0.055)},
        {range(0.06, 0.08)}}},
      {{0.0}});
  // ---- compression
  add(O::Jpeg, "jpeg", X, C::Compression, {"quality"}, false,
      {{{int_range(80, 90)}, {int_range(60, 75)}, {int_range(40, 55)}, {int_range(20, 35)},
        {int_range(5, 15)}}},
      std::nullopt);
  add(O::Jpeg2000, "jpeg2000", X, C::Compression, {"step"}, false,
      {{{range(0.01, 0.02)}, {range(0.025, 0.04)}, {range(0.045, 0.07)}, {range(0.08, 0.12)},
        {range(0.13, 0.2)}}},
      {{0.0}});
  add(O::Ringing, "ringing", X, C::Compression, {"cutoff"}, false,
      {{{range(0.75, 0.85)}, {range(0.6, 0.7)}, {range(0.45, 0.55)}, {range(0.35, 0.42)},
        {range(0.25, 0.32)}}},
      {{1.0}});
  add(O::ChromaBlockiness, "chroma_blockiness", X, C::Compression, {"block", "luma_blend"}, false,
      {{{int_range(2, 2), range(0.0, 0.05)}, {int_range(4, 4), range(0.05, 0.1)},
        {int_range(6, 8), range(0.1, 0.15)}, {int_range(10, 12), range(0.15, 0.25)},
        {int_range(14, 16), range(0.25, 0.35)}}},
      {{1.0, 0.0}});
  // ---- color
  auto gains = [](double lo, double hi) {
    return Row{signed_range(1.0, lo, hi), signed_range(1.0, lo, hi), signed_range(1.0, lo, hi)};
  };
  add(O::ColorCast, "color_cast", X, C::Color, {"gain_r", "gain_g", "gain_b"}, false,
      {{gains(0.03, 0.06), gains(0.06, 0.1), gains(0.1, 0.15), gains(0.15, 0.22), gains(0.22, 0.3)}},
      {{1.0, 1.0, 1.0}});
  add(O::SaturationShift, "saturation_shift", X, C::Color, {"factor"}, false,
      {{{signed_range(1.0, 0.1, 0.2)}, {signed_range(1.0, 0.2, 0.3)}, {signed_range(1.0, 0.3, 0.45)},
        {signed_range(1.0, 0.45, 0.6)}, {signed_range(1.0, 0.6, 0.8)}}},
      {{1.0}});
  add(O::ContrastShift, "contrast_shift", X, C::Color, {"factor"}, false,
      {{{signed_range(1.0, 0.05, 0.1)}, {signed_range(1.0, 0.1, 0.2)}, {signed_range(1.0, 0.2, 0.3)},
        {signed_range(1.0, 0.3, 0.45)}, {signed_range(1.0, 0.45, 0.6)}}},
      {{1.0}});
  add(O::GammaShift, "gamma_shift", X, C::Color, {"gamma"}, false,
      {{{signed_range(1.0, 0.05, 0.1)}, {signed_range(1.0, 0.1, 0.2)}, {signed_range(1.0, 0.2, 0.35)},
        {signed_range(1.0, 0.35, 0.5)}, {signed_range(1.0, 0.5, 0.7)}}},
      {{1.0}});
  add(O::Posterize, "posterize", X, C::Color, {"levels"}, false,
      {{{int_range(48, 64)}, {int_range(24, 32)}, {int_range(12, 16)}, {int_range(6, 8)}, {int_range(3, 4)}}},
      std::nullopt);
  // ---- geometric
  add(O::PerspectiveWarp, "perspective_warp", X, C::Geometric, {"jitter"}, true,
      {{{range(0.01, 0.03)}, {range(0.03, 0.05)}, {range(0.05, 0.08)}, {range(0.08, 0.11)},
        {range(0.11, 0.15)}}},
      {{0.0}});
  add(O::BarrelDistortion, "barrel_distortion", X, C::Geometric, {"k"}, true,
      {{{range(0.03, 0.06)}, {range(0.06, 0.1)}, {range(0.1, 0.15)}, {range(0.15, 0.22)},
        {range(0.22, 0.3)}}},
      {{0.0}});
  add(O::PincushionDistortion, "pincushion_distortion", X, C::Geometric, {"k"}, true,
      {{{range(0.03, 0.06)}, {range(0.06, 0.1)}, {range(0.1, 0.15)}, {range(0.15, 0.22)},
        {range(0.22, 0.3)}}},
      {{0.0}});
  add(O::DownUpResize, "down_up_resize", X, C::Geometric, {"factor"}, true,
      {{{range(0.8, 0.9)}, {range(0.6, 0.75)}, {range(0.45, 0.55)}, {range(0.33, 0.4)},
        {range(0.2, 0.28)}}},
      {{1.0}});
  add(O::RotationCrop, "rotation_crop", X, C::Geometric, {"angle"}, true,
      {{{signed_range(0.0, 1.0, 3.0)}, {signed_range(0.0, 3.0, 5.0)}, {signed_range(0.0, 5.0, 8.0)},
        {signed_range(0.0, 8.0, 12.0)}, {signed_range(0.0, 12.0, 18.0)}}},
      {{0.0}});
  // ---- environmental
  add(O::Fog, "fog", X, C::Environmental, {"density"}, false,
      {{{range(0.1, 0.2)}, {range(0.2, 0.35)}, {range(0.35, 0.5)}, {range(0.5, 0.7)}, {range(0.7, 0.95)}}},
      {{0.0}});
  add(O::Rain, "rain", X, C::Environmental, {"density", "length"}, false,
      {{{range(0.0005, 0.001), int_range(4, 8)}, {range(0.001, 0.002), int_range(6, 10)},
        {range(0.002, 0.004), int_range(8, 14)}, {range(0.004, 0.007), int_range(10, 18)},
        {range(0.007, 0.012), int_range(14, 24)}}},
      {{0.0, 10.0}});
  add(O::Snow, "snow", X, C::Environmental, {"density"}, false,
      {{{range(0.001, 0.003)}, {range(0.003, 0.006)}, {range(0.006, 0.01)}, {range(0.01, 0.016)},
        {range(0.016, 0.025)}}},
      {{0.0}});
  add(O::ShadowMask, "shadow_mask", X, C::Environmental, {"strength"}, false,
      {{{range(0.1, 0.2)}, {range(0.2, 0.3)}, {range(0.3, 0.4)}, {range(0.4, 0.5)}, {range(0.5, 0.65)}}},
      {{0.0}});
  // ---- sensor
  add(O::SensorBlooming, "sensor_blooming", X, C::Sensor, {"threshold", "spread"}, false,
      {{{range(0.9, 0.95), range(1.0, 2.0)}, {range(0.85, 0.9), range(2.0, 3.0)},
        {range(0.8, 0.85), range(3.0, 4.0)}, {range(0.72, 0.8), range(4.0, 6.0)},
        {range(0.65, 0.72), range(6.0, 8.0)}}},
      {{0.8, 0.0}});
  add(O::Vignette, "vignette", X, C::Sensor, {"strength"}, false,
      {{{range(0.1, 0.2)}, {range(0.2, 0.3)}, {range(0.3, 0.4)}, {range(0.4, 0.55)}, {range(0.55, 0.7)}}},
      {{0.0}});
  add(O::HotPixels, "hot_pixels", X, C::Sensor, {"fraction"}, false,
      {{{range(0.0005, 0.001)}, {range(0.001, 0.002)}, {range(0.002, 0.004)}, {range(0.004, 0.008)},
        {range(0.008, 0.015)}}},
      {{0.0}});
  // ---- occlusion / overlay
  add(O::RandomOcclusion, "random_occlusion", X, C::Occlusion, {"count", "max_frac"}, false,
      {{{int_range(1, 1), range(0.08, 0.12)}, {int_range(1, 2), range(0.12, 0.16)},
        {int_range(2, 3), range(0.16, 0.2)}, {int_range(3, 4), range(0.2, 0.25)},
        {int_range(4, 6), range(0.25, 0.3)}}},
      std::nullopt);
  add(O::TextOverlay, "text_overlay", X, C::Occlusion, {"count", "scale", "opacity"}, false,
      {{{int_range(1, 1), int_range(1, 1), range(0.4, 0.5)}, {int_range(1, 2), int_range(1, 2), range(0.5, 0.6)},
        {int_range(2, 3), int_range(2, 2), range(0.6, 0.7)}, {int_range(3, 4), int_range(2, 3), range(0.7, 0.8)},
        {int_range(4, 6), int_range(3, 3), range(0.8, 0.95)}}},
      {{0.0, 1.0, 0.8}});
  add(O::WatermarkGrid, "watermark_grid", X, C::Occlusion, {"opacity", "spacing"}, false,
      {{{range(0.05, 0.08), int_range(28, 36)}, {range(0.08, 0.12), int_range(24, 30)},
        {range(0.12, 0.18), int_range(20, 26)}, {range(0.18, 0.25), int_range(16, 22)},
        {range(0.25, 0.35), int_range(12, 18)}}},
      {{0.0, 24.0}});
  add(O::ScreenshotBorder, "screenshot_border", X, C::Occlusion, {"fraction"}, true,
      {{{range(0.02, 0.04)}, {range(0.04, 0.06)}, {range(0.06, 0.09)}, {range(0.09, 0.12)},
        {range(0.12, 0.16)}}},
      {{0.0}});

  // ---- official-style pipeline
  add(O::OfficialGaussianBlur, "official_gaussian_blur", F, C::Blur, {"sigma"}, false,
      {{{range(0.4, 0.6)}, {range(0.8, 1.0)}, {range(1.2, 1.5)}, {range(1.7, 2.0)}, {range(2.2, 2.6)}}},
      {{0.0}});
  add(O::OfficialGaussianNoise, "official_gaussian_noise", F, C::Noise, {"sigma"}, false,
      {{{range(0.01, 0.02)}, {range(0.025, 0.035)}, {range(0.04, 0.055)}, {range(0.06, 0.08)},
        {range(0.09, 0.12)}}},
      {{0.0}});
  add(O::OfficialJpeg, "official_jpeg", F, C::Compression, {"quality"}, false,
      {{{int_range(85, 95)}, {int_range(70, 80)}, {int_range(55, 65)}, {int_range(40, 50)},
        {int_range(20, 35)}}},
      std::nullopt);
  add(O::OfficialResize, "official_resize", F, C::Geometric, {"factor"}, true,
      {{{range(0.85, 0.95)}, {range(0.7, 0.8)}, {range(0.55, 0.65)}, {range(0.45, 0.5)},
        {range(0.35, 0.42)}}},
      {{1.0}});
  auto adjust = [](double b_lo, double b_hi, double c_lo, double c_hi, double s_lo, double s_hi) {
    return Row{signed_range(0.0, b_lo, b_hi), signed_range(1.0, c_lo, c_hi), signed_range(1.0, s_lo, s_hi)};
  };
  add(O::OfficialColorAdjust, "official_color_adjust", F, C::Color,
      {"brightness", "contrast", "saturation"}, false,
      {{adjust(0.02, 0.04, 0.05, 0.1, 0.1, 0.2), adjust(0.04, 0.07, 0.1, 0.15, 0.2, 0.3),
        adjust(0.07, 0.1, 0.15, 0.25, 0.3, 0.4), adjust(0.1, 0.14, 0.25, 0.35, 0.4, 0.55),
        adjust(0.14, 0.2, 0.35, 0.5, 0.55, 0.7)}},
      {{0.0, 1.0, 1.0}});
  add(O::OfficialLensDistortion, "official_lens_distortion", F, C::Geometric, {"k"}, true,
      {{{signed_range(0.0, 0.03, 0.06)}, {signed_range(0.0, 0.06, 0.1)}, {signed_range(0.0, 0.1, 0.14)},
        {signed_range(0.0, 0.14, 0.2)}, {signed_range(0.0, 0.2, 0.26)}}},
      {{0.0}});
  const Cell kind = int_fixed(1.0, 0.0, 1.0);
  add(O::OfficialFilter, "official_filter", F, C::Blur, {"kind", "amount"}, false,
      {{{kind, range(0.2, 0.4)}, {kind, range(0.4, 0.6)}, {kind, range(0.6, 0.8)},
        {kind, range(0.8, 1.0)}, {kind, range(1.0, 1.3)}}},
      {{1.0, 0.0}});
  add(O::OfficialMotionBlur, "official_motion_blur", F, C::Blur, {"length", "angle"}, false,
      {{{int_range(3, 3), angle}, {int_range(5, 5), angle}, {int_range(7, 7), angle},
        {int_range(9, 9), angle}, {int_range(11, 13), angle}}},
      {{1.0, 0.0}});
  add(O::OfficialRecompress, "official_recompress", F, C::Compression, {"quality1", "quality2"}, false,
      {{{int_range(85, 95), int_range(80, 90)}, {int_range(75, 85), int_range(65, 75)},
        {int_range(65, 75), int_range(50, 60)}, {int_range(50, 60), int_range(35, 45)},
        {int_range(35, 45), int_range(20, 30)}}},
      std::nullopt);
  return e;
}

const std::vector<Entry>& catalog() {
  static const std::vector<Entry> entries = build_catalog();
  return entries;
}

const Entry& entry(Operator op) {
  const auto idx = static_cast<std::size_t>(op);
  if (idx >= catalog().size()) throw InvalidArgument("unknown operator");
  return catalog()[idx];
}

const std::vector<Operator>& operators_where(std::optional<Catalog> which) {
  static const auto collect = [](std::optional<Catalog> c) {
    std::vector<Operator> v;
    for (const Entry& en : catalog()) {
      if (!c || en.info.catalog == *c) v.push_back(en.info.op);
    }
    return v;
  };
  static const std::vector<Operator> all = collect(std::nullopt);
  static const std::vector<Operator> official = collect(Catalog::Official);
  static const std::vector<Operator> extended = collect(Catalog::Extended);
  if (!which) return all;
  return *which == Catalog::Official ? official : extended;
}

void check_severity(int severity) {
  if (severity < kMinSeverity || severity > kMaxSeverity) {
    throw InvalidArgument("severity must be in 1..5, got " + std::to_string(severity));
  }
}

double nominal_value(const Cell& cell) {
  if (!std::isnan(cell.nominal_override)) return cell.nominal_override;
  double v = 0.5 * (cell.lo + cell.hi);
  if (cell.integer) v = std::round(v);
  return cell.signed_about_center ? cell.center + v : v;
}

double draw_value(const Cell& cell, SeededRng& rng) {
  double v = cell.integer ? static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(cell.lo),
                                                                 static_cast<std::int64_t>(cell.hi)))
                          : rng.uniform(cell.lo, cell.hi);
  if (cell.signed_about_center) v = rng.bernoulli(0.5) ? cell.center + v : cell.center - v;
  return v;
}

int as_int(const ParamMap& p, const char* key) {
  return static_cast<int>(std::lround(p.at(key)));
}

}  // namespace

const OperatorInfo& operator_info(Operator op) { return entry(op).info; }

std::string_view operator_name(Operator op) { return entry(op).info.name; }

Operator parse_operator(std::string_view name) {
  for (const Entry& en : catalog()) {
    if (en.info.name == name) return en.info.op;
  }
  throw InvalidArgument("unknown distortion operator '" + std::string(name) + "'");
}

std::string_view category_name(Category category) {
  switch (category) {
    case Category::Blur: return "blur";
    case Category::Noise: return "noise";
    case Category::Compression: return "compression";
    case Category::Color: return "color";
    case Category::Geometric: return "geometric";
    case Category::Environmental: return "environmental";
    case Category::Sensor: return "sensor";
    case Category::Occlusion: return "occlusion";
  }
  return "unknown";
}

std::span<const Operator> all_operators() { return operators_where(std::nullopt); }
std::span<const Operator> official_operators() { return operators_where(Catalog::Official); }
std::span<const Operator> extended_operators() { return operators_where(Catalog::Extended); }

ParamMap nominal_params(Operator op, int severity) {
  check_severity(severity);
  const Entry& en = entry(op);
  const Row& row = en.table[static_cast<std::size_t>(severity - 1)];
  ParamMap m;
  for (std::size_t i = 0; i < row.size(); ++i) m.emplace(std::string(en.info.params[i]), nominal_value(row[i]));
  return m;
}

ParamMap sample_params(Operator op, int severity, SeededRng& rng) {
  check_severity(severity);
  const Entry& en = entry(op);
  const Row& row = en.table[static_cast<std::size_t>(severity - 1)];
  ParamMap m;
  for (std::size_t i = 0; i < row.size(); ++i) m.emplace(std::string(en.info.params[i]), draw_value(row[i], rng));
  return m;
}

std::optional<ParamMap> identity_params(Operator op) { return entry(op).identity; }

DistortionSpec make_spec(Operator op, int severity, std::uint64_t seed) {
  return DistortionSpec{op, severity, nominal_params(op, severity), seed};
}

void validate(const DistortionSpec& spec) {
  const Entry& en = entry(spec.op);
  check_severity(spec.severity);
  if (spec.params.size() != en.info.params.size()) {
    throw InvalidArgument("operator " + std::string(en.info.name) + " expects " +
                          std::to_string(en.info.params.size()) + " parameters, got " +
                          std::to_string(spec.params.size()));
  }
  for (auto name : en.info.params) {
    const auto it = spec.params.find(std::string(name));
    if (it == spec.params.end()) {
      throw InvalidArgument("operator " + std::string(en.info.name) + " is missing parameter '" +
                            std::string(name) + "'");
    }
    if (!std::isfinite(it->second)) throw InvalidArgument("parameter '" + std::string(name) + "' is not finite");
  }
}

ImageBuffer apply(const DistortionSpec& spec, const ImageBuffer& img) {
  validate(spec);
  const ParamMap& p = spec.params;
  const std::uint64_t seed = spec.seed;
  ImageBuffer out = [&]() -> ImageBuffer {
    switch (spec.op) {
      case Operator::GaussianBlur:
      case Operator::OfficialGaussianBlur: return ops::gaussian_blur(img, p.at("sigma"));
      case Operator::MotionBlur:
      case Operator::OfficialMotionBlur: return ops::motion_blur(img, as_int(p, "length"), p.at("angle"));
      case Operator::DefocusBlur: return ops::defocus_blur(img, p.at("radius"));
      case Operator::AtmosphericBlur: return ops::atmospheric_blur(img, p.at("sigma"));
      case Operator::ZoomBlur: return ops::zoom_blur(img, p.at("strength"));
      case Operator::GaussianNoise:
      case Operator::OfficialGaussianNoise: return ops::gaussian_noise(img, p.at("sigma"), seed);
      case Operator::PoissonNoise: return ops::poisson_noise(img, p.at("scale"), seed);
      case Operator::IsoNoise: return ops::iso_noise(img, p.at("sigma"), seed);
      case Operator::SaltPepper: return ops::salt_pepper(img, p.at("amount"), seed);
      case Operator::BandingNoise: return ops::banding_noise(img, p.at("amplitude"), seed);
      case Operator::Jpeg:
      case Operator::OfficialJpeg: return ops::jpeg_compress(img, as_int(p, "quality"));
      case Operator::Jpeg2000: return ops::wavelet_compress(img, p.at("step"));
      case Operator::Ringing: return ops::ringing(img, p.at("cutoff"));
      case Operator::ChromaBlockiness:
        return ops::chroma_blockiness(img, as_int(p, "block"), p.at("luma_blend"));
      case Operator::ColorCast:
        return ops::color_cast(img, {p.at("gain_r"), p.at("gain_g"), p.at("gain_b")});
      case Operator::SaturationShift: return ops::saturation_shift(img, p.at("factor"));
      case Operator::ContrastShift: return ops::contrast_shift(img, p.at("factor"));
      case Operator::GammaShift: return ops::gamma_shift(img, p.at("gamma"));
      case Operator::Posterize: return ops::posterize(img, as_int(p, "levels"));
      case Operator::PerspectiveWarp: return ops::perspective_warp(img, p.at("jitter"), seed);
      case Operator::BarrelDistortion: return ops::lens_distortion(img, p.at("k"));
      case Operator::PincushionDistortion: return ops::lens_distortion(img, -p.at("k"));
      case Operator::DownUpResize:
      case Operator::OfficialResize: return ops::down_up_resize(img, p.at("factor"));
      case Operator::RotationCrop: return ops::rotation_crop(img, p.at("angle"));
      case Operator::Fog: return ops::fog(img, p.at("density"), seed);
      case Operator::Rain: return ops::rain(img, p.at("density"), as_int(p, "length"), seed);
      case Operator::Snow: return ops::snow(img, p.at("density"), seed);
      case Operator::ShadowMask: return ops::shadow_mask(img, p.at("strength"), seed);
      case Operator::SensorBlooming: return ops::sensor_blooming(img, p.at("threshold"), p.at("spread"));
      case Operator::Vignette: return ops::vignette(img, p.at("strength"));
      case Operator::HotPixels: return ops::hot_pixels(img, p.at("fraction"), seed);
      case Operator::RandomOcclusion:
        return ops::random_occlusion(img, as_int(p, "count"), p.at("max_frac"), seed);
      case Operator::TextOverlay:
        return ops::text_overlay(img, as_int(p, "count"), as_int(p, "scale"), p.at("opacity"), seed);
      case Operator::WatermarkGrid:
        return ops::watermark_grid(img, p.at("opacity"), as_int(p, "spacing"), seed);
      case Operator::ScreenshotBorder: return ops::screenshot_border(img, p.at("fraction"), seed);
      case Operator::OfficialColorAdjust:
        return ops::color_adjust(img, p.at("brightness"), p.at("contrast"), p.at("saturation"));
      case Operator::OfficialLensDistortion: return ops::lens_distortion(img, p.at("k"));
      case Operator::OfficialFilter: return ops::filter(img, as_int(p, "kind"), p.at("amount"));
      case Operator::OfficialRecompress:
        return ops::recompress(img, as_int(p, "quality1"), as_int(p, "quality2"));
    }
    throw InvalidArgument("unknown operator");
  }();
  return clamp(std::move(out));
}

std::optional<DistortionSpec> sample_spec(SeededRng& rng, PipelineMode mode) {
  std::span<const Operator> pool;
  switch (mode) {
    case PipelineMode::Clean: return std::nullopt;
    case PipelineMode::OfficialOnly: pool = official_operators(); break;
    case PipelineMode::ExtendedOnly: pool = extended_operators(); break;
    case PipelineMode::MixedEqual:
      pool = rng.bernoulli(0.5) ? official_operators() : extended_operators();
      break;
  }
  const Operator op = pool[rng.below(pool.size())];
  const auto severity = static_cast<int>(rng.uniform_int(kMinSeverity, kMaxSeverity));
  ParamMap params = sample_params(op, severity, rng);
  const std::uint64_t seed = rng.next_u64();
  return DistortionSpec{op, severity, std::move(params), seed};
}

PipelineMode parse_pipeline_mode(std::string_view text) {
  if (text == "clean") return PipelineMode::Clean;
  if (text == "official") return PipelineMode::OfficialOnly;
  if (text == "extended") return PipelineMode::ExtendedOnly;
  if (text == "mixed") return PipelineMode::MixedEqual;
  throw InvalidArgument("unknown pipeline mode '" + std::string(text) +
                        "' (expected clean|official|extended|mixed)");
}

std::string_view pipeline_mode_name(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::Clean: return "clean";
    case PipelineMode::OfficialOnly: return "official";
    case PipelineMode::ExtendedOnly: return "extended";
    case PipelineMode::MixedEqual: return "mixed";
  }
  return "unknown";
}

nlohmann::ordered_json spec_to_json(const DistortionSpec& spec) {
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (auto name : operator_info(spec.op).params) {
    const auto it = spec.params.find(std::string(name));
    if (it != spec.params.end()) params[std::string(name)] = it->second;
  }
  nlohmann::ordered_json j;
  j["op"] = std::string(operator_name(spec.op));
  j["severity"] = spec.severity;
  j["params"] = std::move(params);
  j["seed"] = spec.seed;
  return j;
}

DistortionSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("distortion spec must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "op" && key != "severity" && key != "params" && key != "seed") {
      throw InvalidArgument("unknown distortion spec field '" + key + "'");
    }
  }
  if (!j.contains("op") || !j["op"].is_string()) throw InvalidArgument("distortion spec needs string 'op'");
  if (!j.contains("severity") || !j["severity"].is_number_integer()) {
    throw InvalidArgument("distortion spec needs integer 'severity'");
  }
  if (!j.contains("params") || !j["params"].is_object()) {
    throw InvalidArgument("distortion spec needs object 'params'");
  }
  if (!j.contains("seed") || !j["seed"].is_number_unsigned()) {
    throw InvalidArgument("distortion spec needs unsigned integer 'seed'");
  }
  DistortionSpec spec{parse_operator(j["op"].get<std::string>()), j["severity"].get<int>(), {},
                      j["seed"].get<std::uint64_t>()};
  for (const auto& [key, value] : j["params"].items()) {
    if (!value.is_number()) throw InvalidArgument("parameter '" + key + "' must be numeric");
    spec.params.emplace(key, value.get<double>());
  }
  validate(spec);
  return spec;
}

std::string spec_to_string(const DistortionSpec& spec) { return spec_to_json(spec).dump(); }

}  // namespace featdistill
