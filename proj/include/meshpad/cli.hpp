#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "meshpad/codec.hpp"
#include "meshpad/counting_model.hpp"
#include "meshpad/datagen.hpp"
#include "meshpad/deletion.hpp"
#include "meshpad/editgen.hpp"
#include "meshpad/mesh_stats.hpp"
#include "meshpad/obj_io.hpp"
#include "meshpad/procedural.hpp"
#include "meshpad/sketch.hpp"
#include "meshpad/token_io.hpp"

namespace meshpad::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

/// OBJ -> quantized mesh; normalized into the unit cube unless `raw`.
inline QuantizedMesh load_mesh(const std::string& path, int bins, bool raw) {
  const RealMesh real = load_obj(path);
  if (real.empty()) return QuantizedMesh(bins);
  return quantize(raw ? real : normalize_to_unit_cube(real), bins);
}

/// --camera accepts a JSON file path or inline JSON.
inline CameraPose load_camera(const std::string& spec) {
  if (spec.empty()) return {};
  if (std::filesystem::exists(spec)) {
    std::ifstream in(spec);
    return camera_from_json(nlohmann::json::parse(in));
  }
  return camera_from_json(nlohmann::json::parse(spec));
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

/// Fitting corpus: datagen sample directories (kept.obj + removed.obj each).
inline std::vector<TokenSequence> load_training_sequences(const std::filesystem::path& dir, int bins) {
  std::vector<TokenSequence> out;
  std::vector<std::filesystem::path> samples;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_directory() && std::filesystem::exists(e.path() / "kept.obj")) samples.push_back(e.path());
  std::sort(samples.begin(), samples.end());
  for (const auto& s : samples)
    out.push_back(addition_target(load_mesh((s / "kept.obj").string(), bins, true),
                                  load_mesh((s / "removed.obj").string(), bins, true)));
  if (out.empty()) throw Error("no datagen samples under " + dir.string());
  return out;
}

}  // namespace detail

/// Entry point for the meshpad tool. Returns 0 on success, 1 on runtime
/// errors and 2 on usage errors.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"meshpad: sketch-driven mesh editing toolkit"};
  app.require_subcommand(1);
  int bins = kDefaultBins;
  std::uint64_t seed = 0;
  bool verbose = false;
  app.add_option("--bins", bins, "quantization bins per axis")->check(CLI::Range(2, 65000));
  app.add_option("--seed", seed, "random seed");
  app.add_flag("-v,--verbose", verbose, "log progress to stderr");

  std::function<void()> action;
  auto log = [&](const std::string& msg) {
    if (verbose) err << msg << '\n';
  };

  // tokenize
  std::string tok_in, tok_out;
  bool raw = false;
  auto* tokenize_cmd = app.add_subcommand("tokenize", "OBJ -> token stream (.tok binary or .json)");
  tokenize_cmd->add_option("input", tok_in, "input OBJ")->required()->check(CLI::ExistingFile);
  tokenize_cmd->add_option("output", tok_out, "output .tok or .json")->required();
  tokenize_cmd->add_flag("--raw", raw, "skip unit-cube normalization");
  tokenize_cmd->callback([&] {
    action = [&] {
      const QuantizedMesh mesh = detail::load_mesh(tok_in, bins, raw);
      const TokenSequence seq = tokenize(mesh);
      if (detail::ends_with(tok_out, ".json")) {
        detail::write_text(tok_out, tokens_to_json(seq).dump() + "\n");
      } else {
        save_tokens(seq, tok_out);
      }
      log("faces " + std::to_string(mesh.size()) + ", tokens " + std::to_string(seq.size()));
    };
  });

  // detokenize
  std::string detok_in, detok_out;
  auto* detokenize_cmd = app.add_subcommand("detokenize", "token stream -> OBJ");
  detokenize_cmd->add_option("input", detok_in, "input .tok or .json")->required()->check(CLI::ExistingFile);
  detokenize_cmd->add_option("output", detok_out, "output OBJ")->required();
  detokenize_cmd->callback([&] {
    action = [&] {
      TokenSequence seq;
      if (detail::ends_with(detok_in, ".json")) {
        std::ifstream in(detok_in);
        seq = tokens_from_json(nlohmann::json::parse(in));
      } else {
        seq = load_tokens(detok_in);
      }
      save_obj(dequantize(detokenize(seq)), detok_out);
    };
  });

  // datagen
  std::string corpus_dir, out_dir;
  std::size_t sample_count = 0;
  unsigned threads = 0;
  bool augment_sketch = false;
  bool no_augment_mesh = false;
  auto* datagen_cmd = app.add_subcommand("datagen", "generate self-supervised edit pairs from an OBJ corpus");
  datagen_cmd->add_option("--corpus", corpus_dir, "directory of OBJ files")->required()->check(CLI::ExistingDirectory);
  datagen_cmd->add_option("--out", out_dir, "output directory")->required();
  datagen_cmd->add_option("--count", sample_count, "number of samples")->required();
  datagen_cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
  datagen_cmd->add_flag("--augment-sketch", augment_sketch, "also write an augmented sketch");
  datagen_cmd->add_flag("--no-augment-mesh", no_augment_mesh, "disable per-axis scaling");
  datagen_cmd->callback([&] {
    action = [&] {
      DatagenConfig cfg;
      cfg.bins = bins;
      cfg.augment_sketch = augment_sketch;
      cfg.augment_mesh = !no_augment_mesh;
      const auto summary = run_datagen(list_obj_files(corpus_dir), out_dir, sample_count, seed, cfg, threads);
      out << nlohmann::json{{"corpus_accepted", summary.corpus_accepted},
                            {"written", summary.written},
                            {"rejected", summary.rejected}}
                 .dump()
          << '\n';
    };
  });

  // sketch
  std::string sketch_in, sketch_out, camera_spec;
  auto* sketch_cmd = app.add_subcommand("sketch", "render a synthetic sketch PNG");
  sketch_cmd->add_option("input", sketch_in, "input OBJ")->required()->check(CLI::ExistingFile);
  sketch_cmd->add_option("output", sketch_out, "output PNG")->required();
  sketch_cmd->add_option("--camera", camera_spec, "camera JSON file or inline JSON");
  sketch_cmd->add_flag("--raw", raw, "skip unit-cube normalization");
  sketch_cmd->callback([&] {
    action = [&] {
      const QuantizedMesh mesh = detail::load_mesh(sketch_in, bins, raw);
      write_file_bytes(sketch_out, encode_sketch_png(synth_sketch(mesh, QuantizedMesh(bins), detail::load_camera(camera_spec))));
    };
  });

  // edit / delete
  std::string mesh_path, old_sketch, new_sketch, edit_out, mode = "add", backend = "oracle";
  std::string target_path, model_path, speculator_path;
  bool speculate = false;
  bool depth_test = false;
  std::size_t max_tokens = DecodeConfig{}.max_tokens;
  auto apply_edit = [&](bool deleting) {
    const QuantizedMesh mesh = detail::load_mesh(mesh_path, bins, raw);
    const CameraPose camera = detail::load_camera(camera_spec);
    const SketchImage before = decode_sketch_png(read_file_bytes(old_sketch));
    const SketchImage after = decode_sketch_png(read_file_bytes(new_sketch));
    const SketchDiff diff = sketch_diff(before, after);
    QuantizedMesh result(bins);
    if (deleting) {
      // Erased pixels: strokes that vanished plus old strokes re-marked as edit strokes.
      Bitmap erased = bitmap_or(diff.erased, after.edit());
      const Bitmap existing = before.strokes();
      for (std::size_t i = 0; i < erased.size(); ++i) erased.data()[i] &= existing.data()[i];
      GeometricDeletionParams params;
      params.depth_test = depth_test;
      const PruneResult pruned = apply_deletion(mesh, geometric_labels_from_strokes(mesh, erased, camera, params));
      result = pruned.kept;
      log("removed " + std::to_string(pruned.removed.size()) + " faces");
    } else {
      DecodeConfig cfg;
      cfg.speculate = speculate;
      cfg.seed = seed;
      cfg.max_tokens = max_tokens;
      const TokenSequence prompt = addition_prompt(mesh);
      Condition condition;
      condition.sketch = &after;
      DecodeTrace trace;
      if (backend == "oracle") {
        if (target_path.empty()) throw Error("--backend oracle needs --target");
        const QuantizedMesh target = detail::load_mesh(target_path, bins, raw);
        const auto pair = oracle_model(addition_target(mesh, difference(target, mesh)));
        trace = generate_addition(*pair.model, pair.speculator.get(), prompt, condition, cfg);
      } else {
        if (model_path.empty()) throw Error("--backend counting needs --model");
        const CountingModel model = CountingModel::load(model_path);
        std::optional<CountingSpeculator> spec;
        if (!speculator_path.empty()) spec = CountingSpeculator::load(speculator_path);
        if (cfg.speculate && !spec) throw Error("--speculate needs --speculator");
        trace = generate_addition(model, spec ? &*spec : nullptr, prompt, condition, cfg);
      }
      if (trace.truncated) err << "warning: generation truncated at " << cfg.max_tokens << " tokens\n";
      result = merge(mesh, decode_continuation(prompt.tokens, trace.tokens, bins));
      log("passes " + std::to_string(trace.model_forward_passes) + ", tokens " + std::to_string(trace.tokens.size()));
    }
    save_obj(dequantize(result), edit_out);
  };
  auto add_edit_options = [&](CLI::App* cmd) {
    cmd->add_option("--mesh", mesh_path, "current mesh OBJ")->required()->check(CLI::ExistingFile);
    cmd->add_option("--sketch", old_sketch, "sketch PNG before editing")->required()->check(CLI::ExistingFile);
    cmd->add_option("--edited", new_sketch, "edited sketch PNG")->required()->check(CLI::ExistingFile);
    cmd->add_option("--camera", camera_spec, "camera JSON file or inline JSON");
    cmd->add_option("--out", edit_out, "output OBJ")->required();
    cmd->add_flag("--raw", raw, "skip unit-cube normalization");
    cmd->add_flag("--depth-test", depth_test, "keep vertices hidden behind the erased surface");
  };
  auto* edit_cmd = app.add_subcommand("edit", "apply an addition or deletion sketch to a mesh");
  add_edit_options(edit_cmd);
  edit_cmd->add_option("--mode", mode, "add or delete")->check(CLI::IsMember({"add", "delete"}));
  edit_cmd->add_option("--backend", backend, "oracle or counting")->check(CLI::IsMember({"oracle", "counting"}));
  edit_cmd->add_option("--target", target_path, "oracle fixture OBJ")->check(CLI::ExistingFile);
  edit_cmd->add_option("--model", model_path, "counting model file")->check(CLI::ExistingFile);
  edit_cmd->add_option("--speculator", speculator_path, "counting speculator file")->check(CLI::ExistingFile);
  edit_cmd->add_flag("--speculate", speculate, "decode with the vertex speculator");
  edit_cmd->add_option("--max-tokens", max_tokens, "generation budget")->check(CLI::Range(3, 1000000));
  edit_cmd->callback([&] { action = [&] { apply_edit(mode == "delete"); }; });
  auto* delete_cmd = app.add_subcommand("delete", "shorthand for edit --mode delete");
  add_edit_options(delete_cmd);
  delete_cmd->callback([&] { action = [&] { apply_edit(true); }; });

  // bench
  double delay_ms = 1.0;
  int runs = 3;
  std::size_t jobs = 8;
  std::size_t measured = 300;
  auto* bench_cmd = app.add_subcommand("bench", "speculative vs plain decoding throughput");
  bench_cmd->add_option("--delay-ms", delay_ms, "injected delay per forward pass")->check(CLI::Range(0.0, 1000.0));
  bench_cmd->add_option("--runs", runs, "repetitions per workload item")->check(CLI::Range(1, 1000));
  bench_cmd->add_option("--jobs", jobs, "workload size")->check(CLI::Range(1, 1000));
  bench_cmd->add_option("--tokens", measured, "tokens measured per run")->check(CLI::Range(3, 100000));
  bench_cmd->callback([&] {
    action = [&] {
      const auto cases = procedural::addition_workload(jobs, seed, bins);
      std::vector<OraclePair> oracles;
      std::vector<DecodeJob> work;
      for (const auto& c : cases) oracles.push_back(oracle_model(addition_target(c.kept, c.added)));
      for (std::size_t i = 0; i < cases.size(); ++i)
        work.push_back({oracles[i].model.get(), oracles[i].speculator.get(), addition_prompt(cases[i].kept)});
      const auto delay = std::chrono::microseconds(static_cast<long>(delay_ms * 1000.0));
      const BenchReport r = bench_decode(work, DecodeConfig{}, delay, runs, measured);
      out << nlohmann::json{{"tokens_per_second_on", r.on.tokens_per_second},
                            {"tokens_per_second_off", r.off.tokens_per_second},
                            {"ratio", r.ratio},
                            {"passes_on", r.on.passes},
                            {"passes_off", r.off.passes}}
                 .dump()
          << '\n';
    };
  });

  // stats
  std::string stats_in;
  auto* stats_cmd = app.add_subcommand("stats", "mesh topology and token counters");
  stats_cmd->add_option("input", stats_in, "input OBJ")->required()->check(CLI::ExistingFile);
  stats_cmd->add_flag("--raw", raw, "skip unit-cube normalization");
  stats_cmd->callback([&] {
    action = [&] {
      const QuantizedMesh mesh = detail::load_mesh(stats_in, bins, raw);
      const MeshStats s = mesh_stats(mesh);
      const CompressionStats c = compression_stats(mesh);
      out << nlohmann::json{{"faces", s.faces},
                            {"components", s.components},
                            {"nonmanifold_edge_fraction", s.nonmanifold_edge_fraction},
                            {"self_intersections", s.self_intersections},
                            {"tokens", c.tokens},
                            {"naive_tokens", c.naive_tokens},
                            {"compression_ratio", c.ratio}}
                 .dump()
          << '\n';
    };
  });

  // fit
  std::string fit_corpus, fit_model, fit_spec;
  int order = 6;
  auto* fit_cmd = app.add_subcommand("fit", "fit counting model and speculator on datagen output");
  fit_cmd->add_option("--corpus", fit_corpus, "datagen output directory")->required()->check(CLI::ExistingDirectory);
  fit_cmd->add_option("--order", order, "context length")->check(CLI::Range(1, 64));
  fit_cmd->add_option("--model", fit_model, "output model file")->required();
  fit_cmd->add_option("--speculator", fit_spec, "output speculator file");
  fit_cmd->callback([&] {
    action = [&] {
      const auto seqs = detail::load_training_sequences(fit_corpus, bins);
      fit_counting_model(seqs, order).save(fit_model);
      if (!fit_spec.empty()) fit_counting_speculator(seqs, order).save(fit_spec);
      out << nlohmann::json{{"sequences", seqs.size()}, {"order", order}}.dump() << '\n';
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }
  try {
    if (action) action();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitOk;
}

}  // namespace meshpad::cli
