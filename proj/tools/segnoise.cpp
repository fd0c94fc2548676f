#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "segnoise/coco_io.hpp"
#include "segnoise/errors.hpp"
#include "segnoise/eval.hpp"
#include "segnoise/noise.hpp"
#include "segnoise/parallel.hpp"
#include "segnoise/prompts.hpp"
#include "segnoise/rng.hpp"
#include "segnoise/synth.hpp"

namespace {

using namespace segnoise;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw IoError("read failed: " + path);
  return ss.str();
}

// An empty path means stdout.
void write_output(const std::string& path, const std::string& data) {
  if (path.empty()) {
    std::cout << data;
    std::cout.flush();
    if (!std::cout) throw IoError("write to stdout failed");
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  f.flush();
  if (!f) throw IoError("short write to " + path);
}

void require_distinct(const std::string& in, const std::string& out, const char* what) {
  if (!out.empty() && out == in)
    throw ValidationError(std::string(what) + " output path must differ from the input path");
}

struct CorruptArgs {
  std::string input;
  std::string out;
  std::string changelog;
  std::string preset_name;
  std::string config_path;
  std::string mode_name;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
};

// Precedence: defaults < config file (its own "preset" key first) < --preset
// < --seed/--mode flags.
NoiseConfig resolve_noise_config(const CorruptArgs& a) {
  NoiseConfig cfg;
  if (!a.config_path.empty()) {
    ordered_json doc;
    try {
      doc = ordered_json::parse(read_file(a.config_path));
    } catch (const ordered_json::parse_error& e) {
      throw ValidationError("config " + a.config_path + ": " + e.what());
    }
    cfg = parse_noise_config(doc, cfg);
  }
  if (!a.preset_name.empty()) {
    NoiseConfig p = preset(a.preset_name);
    p.master_seed = cfg.master_seed;
    p.mode = cfg.mode;
    p.loc_shared_sign = cfg.loc_shared_sign;
    cfg = p;
  }
  if (a.seed_set) cfg.master_seed = a.seed;
  if (!a.mode_name.empty()) cfg.mode = noise_mode_from_name(a.mode_name);
  cfg.validate();
  return cfg;
}

void print_corrupt_summary(const Dataset& in, const Dataset& out, const ChangeLog& log) {
  long long deleted = 0, collapsed = 0, confused = 0;
  for (const ChangeRecord& r : log) {
    deleted += r.deleted;
    collapsed += r.collapsed;
    confused += r.class_swapped;
  }
  std::cerr << "instances in: " << in.annotations.size() << ", out: " << out.annotations.size()
            << ", deleted: " << deleted << ", collapsed: " << collapsed
            << ", class-confused: " << confused << "\n";
}

int cmd_corrupt(const CorruptArgs& a) {
  require_distinct(a.input, a.out, "corrupt");
  require_distinct(a.input, a.changelog, "corrupt");
  NoiseConfig cfg = resolve_noise_config(a);
  Dataset in = parse_dataset(read_file(a.input));
  auto [out, log] = run_noise(in, cfg, resolve_workers(a.workers));
  std::string changelog_path = a.changelog.empty() && !a.out.empty()
                                   ? a.out + ".changelog.jsonl"
                                   : a.changelog;
  write_output(a.out, serialize_dataset(out));
  if (!changelog_path.empty()) write_output(changelog_path, changelog_jsonl(log));
  print_corrupt_summary(in, out, log);
  return 0;
}

struct SynthArgs {
  CorpusSpec spec;
  std::string spec_path;
  std::string out;
  std::string render_dir;
  int workers = 0;
};

CorpusSpec parse_corpus_spec(const ordered_json& doc) {
  if (!doc.is_object()) throw ValidationError("corpus spec: top level must be an object");
  CorpusSpec s;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "images")
        s.num_images = value.get<int>();
      else if (key == "width")
        s.width = value.get<int>();
      else if (key == "height")
        s.height = value.get<int>();
      else if (key == "instances_min")
        s.instances_min = value.get<int>();
      else if (key == "instances_max")
        s.instances_max = value.get<int>();
      else if (key == "categories")
        s.num_categories = value.get<int>();
      else if (key == "supercategories")
        s.num_supercategories = value.get<int>();
      else if (key == "vertices_min")
        s.vertices_min = value.get<int>();
      else if (key == "vertices_max")
        s.vertices_max = value.get<int>();
      else if (key == "size_mix") {
        if (!value.is_array() || value.size() != 3)
          throw ValidationError("corpus spec: size_mix must be an array of 3 fractions");
        for (int i = 0; i < 3; ++i) s.size_mix[static_cast<std::size_t>(i)] = value[i].get<double>();
      } else if (key == "seed")
        s.seed = value.get<std::uint64_t>();
      else
        throw ValidationError("corpus spec: unknown key '" + key + "'");
    } catch (const ordered_json::exception& e) {
      throw ValidationError("corpus spec: bad value for '" + key + "': " + e.what());
    }
  }
  return s;
}

int cmd_synth(const SynthArgs& a, const CLI::App* sub) {
  CorpusSpec spec;
  if (!a.spec_path.empty()) {
    ordered_json doc;
    try {
      doc = ordered_json::parse(read_file(a.spec_path));
    } catch (const ordered_json::parse_error& e) {
      throw ValidationError("corpus spec " + a.spec_path + ": " + e.what());
    }
    spec = parse_corpus_spec(doc);
  }
  // Explicit flags override file values.
  if (sub->count("--images")) spec.num_images = a.spec.num_images;
  if (sub->count("--width")) spec.width = a.spec.width;
  if (sub->count("--height")) spec.height = a.spec.height;
  if (sub->count("--instances")) {
    spec.instances_min = a.spec.instances_min;
    spec.instances_max = a.spec.instances_min;
  }
  if (sub->count("--instances-min")) spec.instances_min = a.spec.instances_min;
  if (sub->count("--instances-max")) spec.instances_max = a.spec.instances_max;
  if (sub->count("--categories")) spec.num_categories = a.spec.num_categories;
  if (sub->count("--supercategories")) spec.num_supercategories = a.spec.num_supercategories;
  if (sub->count("--seed")) spec.seed = a.spec.seed;
  Dataset d = generate_corpus(spec, resolve_workers(a.workers));
  write_output(a.out, serialize_dataset(d));
  if (!a.render_dir.empty()) render_ppm(d, a.render_dir);
  std::cerr << "images: " << d.images.size() << ", annotations: " << d.annotations.size() << "\n";
  return 0;
}

struct PromptArgs {
  std::string input;
  std::string out;
  std::string kind = "point";
  bool noisy = false;
  std::uint64_t seed = 0;
  int workers = 0;
};

int cmd_prompts(const PromptArgs& a) {
  require_distinct(a.input, a.out, "prompts");
  PromptKind kind;
  if (a.kind == "point")
    kind = PromptKind::point;
  else if (a.kind == "box")
    kind = PromptKind::box;
  else
    throw ValidationError("prompts: --kind must be point or box");
  Dataset d = parse_dataset(read_file(a.input));
  std::size_t skipped = 0;
  std::string out = prompts_jsonl(d, kind, a.noisy, a.seed, resolve_workers(a.workers), &skipped);
  write_output(a.out, out);
  if (skipped > 0) std::cerr << "skipped " << skipped << " empty-mask annotations\n";
  return 0;
}

struct EvalArgs {
  std::string clean;
  std::string noisy;
  std::string out_csv;
  std::string out_json;
  int band_d = 0;
  int workers = 0;
  bool csv_set = false;
  bool json_set = false;
};

int cmd_eval(const EvalArgs& a) {
  Dataset clean = parse_dataset(read_file(a.clean));
  Dataset noisy = parse_dataset(read_file(a.noisy));
  EvalReport rep = evaluate_ann_vs_ann(clean, noisy, a.band_d, resolve_workers(a.workers));
  if (a.json_set) write_output(a.out_json, report_json(rep).dump());
  if (a.csv_set || !a.json_set) write_output(a.out_csv, report_csv(rep));
  std::cerr << "mask mAP: " << number_repr(rep.map_mask)
            << ", boundary mAP: " << number_repr(rep.map_boundary) << "\n";
  return 0;
}

struct SweepArgs {
  std::string input;
  std::string out;
  std::uint64_t seed = 0;
  int band_d = 0;
  int workers = 0;
};

int cmd_sweep(const SweepArgs& a) {
  require_distinct(a.input, a.out, "sweep");
  Dataset clean = parse_dataset(read_file(a.input));
  unsigned workers = resolve_workers(a.workers);
  static const char* tiers[4] = {"clean", "low", "medium", "high"};
  std::string csv = "tier,metric,map,ap_small,ap_medium,ap_large\n";
  for (const char* tier : tiers) {
    EvalReport rep;
    if (std::string(tier) == "clean") {
      rep = evaluate_ann_vs_ann(clean, clean, a.band_d, workers);
    } else {
      NoiseConfig cfg = preset(tier);
      cfg.master_seed = sub_seed(a.seed, fnv1a64(tier));
      auto noised = run_noise(clean, cfg, workers);
      rep = evaluate_ann_vs_ann(clean, noised.first, a.band_d, workers);
    }
    for (int m = 0; m < 2; ++m) {
      csv += tier;
      csv += ',';
      csv += m == 0 ? "mask" : "boundary";
      for (int r = 0; r < kNumRanges; ++r) {
        csv += ',';
        csv += number_repr(rep.map_by_range[m][r]);
      }
      csv += '\n';
    }
    std::cerr << "tier " << tier << ": mask mAP " << number_repr(rep.map_mask)
              << ", boundary mAP " << number_repr(rep.map_boundary) << "\n";
  }
  write_output(a.out, csv);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic annotation-noise toolkit for COCO-style instance segmentation"};
  app.require_subcommand(1);

  CorruptArgs ca;
  CLI::App* corrupt = app.add_subcommand("corrupt", "Apply annotation noise to a dataset");
  corrupt->add_option("input", ca.input, "Input COCO JSON")->required();
  corrupt->add_option("--out", ca.out, "Output dataset path (default: stdout)");
  corrupt->add_option("--changelog", ca.changelog,
                      "Changelog JSONL path (default: <out>.changelog.jsonl)");
  corrupt->add_option("--preset", ca.preset_name, "Severity preset: low, medium, high");
  corrupt->add_option("--config", ca.config_path, "Noise config JSON file");
  corrupt->add_option("--seed", ca.seed, "Master seed")->each([&ca](const std::string&) {
    ca.seed_set = true;
  });
  corrupt->add_option("--mode", ca.mode_name,
                      "composite | dilation | erosion | opening | random_scale | shifting | "
                      "localization | approximation");
  corrupt->add_option("--workers", ca.workers, "Worker threads (0 = auto)");

  SynthArgs sa;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic star-convex corpus");
  synth->add_option("--spec", sa.spec_path, "Corpus spec JSON file");
  synth->add_option("--images", sa.spec.num_images, "Image count");
  synth->add_option("--width", sa.spec.width, "Image width");
  synth->add_option("--height", sa.spec.height, "Image height");
  synth->add_option("--instances", sa.spec.instances_min, "Instances per image (fixed count)");
  synth->add_option("--instances-min", sa.spec.instances_min, "Instances per image, lower bound");
  synth->add_option("--instances-max", sa.spec.instances_max, "Instances per image, upper bound");
  synth->add_option("--categories", sa.spec.num_categories, "Category count");
  synth->add_option("--supercategories", sa.spec.num_supercategories, "Supercategory count");
  synth->add_option("--seed", sa.spec.seed, "Corpus seed");
  synth->add_option("--out", sa.out, "Output dataset path (default: stdout)");
  synth->add_option("--render", sa.render_dir, "Write flat-color PPM overlays to this directory");
  synth->add_option("--workers", sa.workers, "Worker threads (0 = auto)");

  PromptArgs pa;
  CLI::App* prompts = app.add_subcommand("prompts", "Emit point or box prompts as JSON lines");
  prompts->add_option("input", pa.input, "Input COCO JSON")->required();
  prompts->add_option("--kind", pa.kind, "point | box")->required();
  prompts->add_flag("--noisy", pa.noisy, "Perturb prompts");
  prompts->add_option("--seed", pa.seed, "Master seed");
  prompts->add_option("--out", pa.out, "Output JSONL path (default: stdout)");
  prompts->add_option("--workers", pa.workers, "Worker threads (0 = auto)");

  EvalArgs ea;
  CLI::App* eval = app.add_subcommand("eval", "Score one annotation set against another");
  eval->add_option("clean", ea.clean, "Ground-truth COCO JSON")->required();
  eval->add_option("noisy", ea.noisy, "Prediction-side COCO JSON")->required();
  eval->add_option("--out-csv", ea.out_csv, "Report CSV path (default: stdout)")
      ->each([&ea](const std::string&) { ea.csv_set = true; });
  eval->add_option("--out-json", ea.out_json, "Report JSON path")->each([&ea](const std::string&) {
    ea.json_set = true;
  });
  eval->add_option("--band-d", ea.band_d, "Boundary band width in pixels (0 = per-image default)");
  eval->add_option("--workers", ea.workers, "Worker threads (0 = auto)");

  SweepArgs wa;
  CLI::App* sweep = app.add_subcommand("sweep", "Corrupt at every severity tier and score each");
  sweep->add_option("input", wa.input, "Clean COCO JSON")->required();
  sweep->add_option("--out", wa.out, "Sweep CSV path (default: stdout)");
  sweep->add_option("--seed", wa.seed, "Master seed; tiers derive their own seeds from it");
  sweep->add_option("--band-d", wa.band_d, "Boundary band width in pixels (0 = per-image default)");
  sweep->add_option("--workers", wa.workers, "Worker threads (0 = auto)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (corrupt->parsed()) return cmd_corrupt(ca);
    if (synth->parsed()) return cmd_synth(sa, synth);
    if (prompts->parsed()) return cmd_prompts(pa);
    if (eval->parsed()) return cmd_eval(ea);
    if (sweep->parsed()) return cmd_sweep(wa);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
