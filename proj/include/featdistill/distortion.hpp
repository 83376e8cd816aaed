#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "featdistill/image.hpp"
#include "featdistill/rng.hpp"

namespace featdistill {

enum class Catalog { Official, Extended };

enum class Category { Blur, Noise, Compression, Color, Geometric, Environmental, Sensor, Occlusion };

// 35 extended operators across eight categories, then the 9 official-style
// operators. Order is part of the sampling contract: changing it changes
// every seeded spec sequence.
enum class Operator : std::uint8_t {
  // blur
  GaussianBlur,
  MotionBlur,
  DefocusBlur,
  AtmosphericBlur,
  ZoomBlur,
  // noise
  GaussianNoise,
  PoissonNoise,
  IsoNoise,
  SaltPepper,
  BandingNoise,
  // compression
  Jpeg,
  Jpeg2000,
  Ringing,
  ChromaBlockiness,
  // color
  ColorCast,
  SaturationShift,
  ContrastShift,
  GammaShift,
  Posterize,
  // geometric
  PerspectiveWarp,
  BarrelDistortion,
  PincushionDistortion,
  DownUpResize,
  RotationCrop,
  // environmental
  Fog,
  Rain,
  Snow,
  ShadowMask,
  // sensor
  SensorBlooming,
  Vignette,
  HotPixels,
  // occlusion / overlay
  RandomOcclusion,
  TextOverlay,
  WatermarkGrid,
  ScreenshotBorder,
  // official-style pipeline
  OfficialGaussianBlur,
  OfficialGaussianNoise,
  OfficialJpeg,
  OfficialResize,
  OfficialColorAdjust,
  OfficialLensDistortion,
  OfficialFilter,
  OfficialMotionBlur,
  OfficialRecompress,
};

inline constexpr int kMinSeverity = 1;
inline constexpr int kMaxSeverity = 5;

using ParamMap = std::map<std::string, double>;

/// One fully determined corruption.
struct DistortionSpec {
  Operator op;
  int severity;
  ParamMap params;
  std::uint64_t seed;

  bool operator==(const DistortionSpec&) const = default;
};

enum class PipelineMode { Clean, OfficialOnly, ExtendedOnly, MixedEqual };

struct OperatorInfo {
  Operator op;
  std::string_view name;
  Catalog catalog;
  Category category;
  std::vector<std::string_view> params;  // declared parameter schema
  bool resampling;                        // geometric resampler; identity holds to 1e-6
};

const OperatorInfo& operator_info(Operator op);
std::string_view operator_name(Operator op);
Operator parse_operator(std::string_view name);
std::string_view category_name(Category category);

std::span<const Operator> all_operators();
std::span<const Operator> official_operators();
std::span<const Operator> extended_operators();

/// Midpoint parameters of the severity table row (positive branch for
/// signed ranges). Deterministic, used by sweeps and tests.
ParamMap nominal_params(Operator op, int severity);

/// Parameters drawn from the severity row.
ParamMap sample_params(Operator op, int severity, SeededRng& rng);

/// The zero-strength setting, when the operator has one.
std::optional<ParamMap> identity_params(Operator op);

DistortionSpec make_spec(Operator op, int severity, std::uint64_t seed);

/// Throws InvalidArgument on bad severity or a parameter key set that does
/// not match the operator schema.
void validate(const DistortionSpec& spec);

/// The degradation function. Output is clamped to [0,1] and has the input
/// shape; identical (spec, img) give bitwise-identical output.
ImageBuffer apply(const DistortionSpec& spec, const ImageBuffer& img);

/// Clean gives nothing; the other modes pick a catalog (fair coin for
/// MixedEqual), then an operator uniformly, a severity uniformly in 1..5,
/// and parameters from the severity table.
std::optional<DistortionSpec> sample_spec(SeededRng& rng, PipelineMode mode);

PipelineMode parse_pipeline_mode(std::string_view text);
std::string_view pipeline_mode_name(PipelineMode mode);

/// {"op":..., "severity":..., "params":{...}, "seed":...}
nlohmann::ordered_json spec_to_json(const DistortionSpec& spec);
DistortionSpec spec_from_json(const nlohmann::json& j);
std::string spec_to_string(const DistortionSpec& spec);

}  // namespace featdistill
