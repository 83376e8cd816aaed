#include "featdistill/config.hpp"

#include <fstream>
#include <set>

#include "featdistill/errors.hpp"

namespace featdistill {
namespace {

using Json = nlohmann::json;

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InvalidArgument(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw InvalidArgument("unknown key '" + where + "." + key + "'");
  }
}

const Json& required(const Json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) throw InvalidArgument("missing key '" + where + "." + key + "'");
  return j.at(key);
}

std::string string_of(const Json& v, const std::string& name) {
  if (!v.is_string()) throw InvalidArgument(name + " must be a string");
  return v.get<std::string>();
}

std::uint64_t count_of(const Json& v, const std::string& name) {
  if (!v.is_number_unsigned()) throw InvalidArgument(name + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

double real_of(const Json& v, const std::string& name) {
  if (!v.is_number()) throw InvalidArgument(name + " must be a number");
  return v.get<double>();
}

std::array<double, 3> triple_of(const Json& v, const std::string& name) {
  if (!v.is_array() || v.size() != 3) throw InvalidArgument(name + " must be an array of 3 numbers");
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) out[i] = real_of(v[i], name);
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

ExpertSpec parse_expert(const Json& j, std::size_t index, const std::filesystem::path& base) {
  const std::string where = "experts[" + std::to_string(index) + "]";
  check_keys(j, where, {"name", "kind", "input_side", "mean", "std", "extractor", "seed"});
  ExpertSpec e;
  e.name = string_of(required(j, where, "name"), where + ".name");
  if (!valid_name(e.name)) throw InvalidArgument(where + ".name must match [A-Za-z0-9_-]+");
  e.profile = default_profile(parse_expert_kind(string_of(required(j, where, "kind"), where + ".kind")));
  if (j.contains("input_side")) {
    e.profile.input_side = static_cast<int>(count_of(j.at("input_side"), where + ".input_side"));
  }
  if (e.profile.input_side <= 0) throw InvalidArgument(where + ".input_side must be > 0");
  if (j.contains("mean")) e.profile.mean = triple_of(j.at("mean"), where + ".mean");
  if (j.contains("std")) e.profile.std = triple_of(j.at("std"), where + ".std");
  for (double s : e.profile.std) {
    if (!(s > 0.0)) throw InvalidArgument(where + ".std entries must be > 0");
  }
  if (j.contains("seed")) e.seed = count_of(j.at("seed"), where + ".seed");

  const std::string ex = where + ".extractor";
  const Json& x = required(j, where, "extractor");
  if (!x.is_object()) throw InvalidArgument(ex + " must be an object");
  const std::string type = string_of(required(x, ex, "type"), ex + ".type");
  if (type == "synthetic") {
    check_keys(x, ex, {"type", "seed", "dim"});
    e.extractor.type = ExtractorRef::Type::Synthetic;
    if (x.contains("seed")) e.extractor.seed = count_of(x.at("seed"), ex + ".seed");
    if (x.contains("dim")) e.extractor.dim = count_of(x.at("dim"), ex + ".dim");
    if (e.extractor.dim == 0) throw InvalidArgument(ex + ".dim must be > 0");
    if (e.profile.input_side % kPatchSide != 0) {
      throw InvalidArgument(where + ".input_side must be a multiple of 16 for a synthetic extractor");
    }
  } else if (type == "embedding_file") {
    check_keys(x, ex, {"type", "path"});
    e.extractor.type = ExtractorRef::Type::EmbeddingFile;
    e.extractor.path = resolve(base, string_of(required(x, ex, "path"), ex + ".path"));
  } else {
    throw InvalidArgument(ex + ".type must be synthetic or embedding_file");
  }
  return e;
}

ToySpec parse_toy(const Json& j) {
  check_keys(j, "toy", {"items", "train_items", "image_side", "test_distorted_fraction", "world"});
  ToySpec t;
  if (j.contains("items")) t.items = count_of(j.at("items"), "toy.items");
  if (j.contains("train_items")) t.train_items = count_of(j.at("train_items"), "toy.train_items");
  if (j.contains("image_side")) t.image_side = static_cast<int>(count_of(j.at("image_side"), "toy.image_side"));
  if (j.contains("test_distorted_fraction")) {
    t.test_distorted_fraction = real_of(j.at("test_distorted_fraction"), "toy.test_distorted_fraction");
  }
  if (t.train_items > t.items || t.train_items < 2 || t.image_side < 16 ||
      !(t.test_distorted_fraction >= 0.0 && t.test_distorted_fraction <= 1.0)) {
    throw InvalidArgument("toy block out of range (need 2 <= train_items <= items, image_side >= 16)");
  }
  if (j.contains("world")) {
    const Json& w = j.at("world");
    check_keys(w, "toy.world", {"tokens", "dim", "robust_dims", "robust_separation", "fragile_separation",
                                "item_noise", "token_noise", "fragile_attenuation", "shift", "noise"});
    ToyWorldParams& p = t.world;
    if (w.contains("tokens")) p.tokens = count_of(w.at("tokens"), "toy.world.tokens");
    if (w.contains("dim")) p.dim = count_of(w.at("dim"), "toy.world.dim");
    if (w.contains("robust_dims")) p.robust_dims = count_of(w.at("robust_dims"), "toy.world.robust_dims");
    if (w.contains("robust_separation")) p.robust_separation = real_of(w.at("robust_separation"), "toy.world.robust_separation");
    if (w.contains("fragile_separation")) p.fragile_separation = real_of(w.at("fragile_separation"), "toy.world.fragile_separation");
    if (w.contains("item_noise")) p.item_noise = real_of(w.at("item_noise"), "toy.world.item_noise");
    if (w.contains("token_noise")) p.token_noise = real_of(w.at("token_noise"), "toy.world.token_noise");
    if (w.contains("fragile_attenuation")) p.fragile_attenuation = real_of(w.at("fragile_attenuation"), "toy.world.fragile_attenuation");
    if (w.contains("shift")) p.shift = real_of(w.at("shift"), "toy.world.shift");
    if (w.contains("noise")) p.noise = real_of(w.at("noise"), "toy.world.noise");
    if (p.tokens == 0 || p.robust_dims >= p.dim) throw InvalidArgument("toy.world needs tokens > 0 and robust_dims < dim");
  }
  return t;
}

}  // namespace

RunConfig parse_run_config(const Json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "config", {"manifest", "output_dir", "seed", "pipeline_mode", "batch_size", "train_split",
                           "source_weights", "train", "experts", "toy"});
  RunConfig c;
  c.base_dir = base_dir;
  c.manifest = resolve(base_dir, string_of(required(j, "config", "manifest"), "manifest"));
  c.output_dir = resolve(base_dir, string_of(required(j, "config", "output_dir"), "output_dir"));
  if (j.contains("seed")) c.seed = count_of(j.at("seed"), "seed");
  if (j.contains("pipeline_mode")) c.pipeline_mode = parse_pipeline_mode(string_of(j.at("pipeline_mode"), "pipeline_mode"));
  if (j.contains("batch_size")) c.batch_size = count_of(j.at("batch_size"), "batch_size");
  if (c.batch_size < 2 || c.batch_size % 2 != 0) throw InvalidArgument("batch_size must be even and >= 2");
  if (j.contains("train_split")) c.train_split = parse_split(string_of(j.at("train_split"), "train_split"));
  if (j.contains("source_weights")) {
    const Json& w = j.at("source_weights");
    if (!w.is_object()) throw InvalidArgument("source_weights must be an object");
    for (const auto& [source, value] : w.items()) {
      const double weight = real_of(value, "source_weights." + source);
      if (!(weight >= 0.0)) throw InvalidArgument("source_weights." + source + " must be >= 0");
      c.source_weights[source] = weight;
    }
  }
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  const Json& experts = required(j, "config", "experts");
  if (!experts.is_array() || experts.empty()) throw InvalidArgument("experts must be a nonempty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < experts.size(); ++i) {
    c.experts.push_back(parse_expert(experts[i], i, base_dir));
    if (!names.insert(c.experts.back().name).second) {
      throw InvalidArgument("duplicate expert name '" + c.experts.back().name + "'");
    }
  }
  if (j.contains("toy")) c.toy = parse_toy(j.at("toy"));
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidArgument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace featdistill
