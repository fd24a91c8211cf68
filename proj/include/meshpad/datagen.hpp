#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "meshpad/mesh.hpp"
#include "meshpad/obj_io.hpp"
#include "meshpad/raster.hpp"
#include "meshpad/sketch.hpp"
#include "meshpad/volume.hpp"

namespace meshpad {

inline constexpr std::size_t kMaxCorpusFaces = 768;

class SampleRejected : public Error {
 public:
  using Error::Error;
};

inline constexpr double kAxisScaleMin = 0.9;
inline constexpr double kAxisScaleMax = 1.1;

inline std::array<double, 3> sample_axis_scales(Rng& rng) {
  return {uniform(rng, kAxisScaleMin, kAxisScaleMax), uniform(rng, kAxisScaleMin, kAxisScaleMax),
          uniform(rng, kAxisScaleMin, kAxisScaleMax)};
}

/// Scales each axis about the cube center, then re-normalizes.
inline RealMesh scale_mesh(const RealMesh& mesh, const std::array<double, 3>& factors) {
  RealMesh out = mesh;
  for (auto& t : out.triangles)
    for (auto& p : t)
      for (int a = 0; a < 3; ++a) p[a] = 0.5 + (p[a] - 0.5) * factors[a];
  return normalize_to_unit_cube(out);
}

inline RealMesh augment_mesh(const RealMesh& mesh, Rng& rng) { return scale_mesh(mesh, sample_axis_scales(rng)); }

/// Ratio of silhouette pixels of `part` to those of `complete`, each rendered alone.
inline double coverage_fraction(const QuantizedMesh& part, const QuantizedMesh& complete, const CameraPose& camera) {
  const std::size_t whole = count(rasterize(complete, camera).coverage());
  if (whole == 0) throw Error("complete mesh renders to an empty mask");
  if (part.empty()) return 0.0;
  const std::size_t partial = count(rasterize(part, camera).coverage());
  return std::min(1.0, static_cast<double>(partial) / static_cast<double>(whole));
}

struct DatagenConfig {
  int bins = kDefaultBins;
  int max_retries = 8;
  double coverage_threshold = 0.95;
  bool augment_mesh = true;
  bool augment_sketch = false;
  CameraPose camera_template{};  // intrinsics; pose angles are sampled
  SketchConfig sketch{};
};

/// One self-supervised edit pair. target = kept U removed, kept and removed disjoint.
struct EditSample {
  RealMesh complete;
  QuantizedMesh target;
  QuantizedMesh kept;
  QuantizedMesh removed;
  SketchImage sketch;
  SketchImage augmented_sketch;  // empty unless augment_sketch is set
  CameraPose camera;
  VolumePair volumes;
  SampleVolume target_volume;  // L after any promotion
  int attempts = 0;
  bool promoted_for_empty_removed = false;
  bool promoted_for_coverage = false;
  double coverage = 0.0;
  bool edit_strokes_empty = false;
};

inline EditSample make_edit_sample(const RealMesh& complete, Rng& rng, const DatagenConfig& cfg = {}) {
  EditSample s;
  s.complete = normalize_to_unit_cube(complete);
  s.target = s.kept = s.removed = QuantizedMesh(cfg.bins);
  if (cfg.augment_mesh) s.complete = augment_mesh(s.complete, rng);
  const QuantizedMesh full = quantize(s.complete, cfg.bins);
  if (full.empty()) throw SampleRejected("complete mesh is empty after quantization");

  s.camera = sample_camera(rng);
  s.camera.distance = cfg.camera_template.distance;
  s.camera.fov_deg = cfg.camera_template.fov_deg;
  s.camera.image_size = cfg.camera_template.image_size;

  for (int attempt = 0; attempt < std::max(1, cfg.max_retries); ++attempt) {
    s.attempts = attempt + 1;
    s.volumes = sample_volume_pair(rng);
    s.target_volume = s.volumes.target;
    s.target = crop(full, s.target_volume);
    s.kept = crop(full, s.volumes.kept);
    s.removed = difference(s.target, s.kept);
    if (!s.removed.empty()) break;
  }
  if (s.removed.empty()) {
    s.promoted_for_empty_removed = true;
    s.target_volume = SampleVolume::all();
    s.target = full;
    s.removed = difference(s.target, s.kept);
    if (s.removed.empty()) throw SampleRejected("kept volume covers the whole mesh");
  }

  if (!s.target_volume.everything) {
    bool measurable = true;
    try {
      s.coverage = coverage_fraction(s.target, full, s.camera);
    } catch (const Error&) {
      measurable = false;  // edge-on mesh with no silhouette
    }
    if (measurable && s.coverage > cfg.coverage_threshold) {
      s.promoted_for_coverage = true;
      s.target_volume = SampleVolume::all();
      s.target = full;
      s.removed = difference(s.target, s.kept);
    }
  } else {
    s.coverage = 1.0;
  }

  s.sketch = synth_sketch(s.target, s.removed, s.camera, cfg.sketch);
  s.edit_strokes_empty = count(s.sketch.edit()) == 0;
  if (cfg.augment_sketch) s.augmented_sketch = augment_sketch(s.sketch, rng);
  return s;
}

inline nlohmann::json sample_meta(const EditSample& s, std::uint64_t seed) {
  return {{"seed", seed},
          {"camera", camera_to_json(s.camera)},
          {"bins", s.target.bins()},
          {"region_a", region_to_json(s.volumes.region_a)},
          {"region_b", region_to_json(s.volumes.region_b)},
          {"volume_target", volume_to_json(s.target_volume)},
          {"volume_kept", volume_to_json(s.volumes.kept)},
          {"b_inside_a", s.volumes.b_inside_a},
          {"attempts", s.attempts},
          {"promoted_for_empty_removed", s.promoted_for_empty_removed},
          {"promoted_for_coverage", s.promoted_for_coverage},
          {"coverage", s.coverage},
          {"edit_strokes_empty", s.edit_strokes_empty},
          {"faces", {{"complete", s.complete.size()},
                     {"target", s.target.size()},
                     {"kept", s.kept.size()},
                     {"removed", s.removed.size()}}}};
}

/// complete.obj, target.obj, kept.obj, removed.obj, sketch.png, meta.json
/// (+ sketch_aug.png when sketch augmentation is on).
inline void write_sample(const std::filesystem::path& dir, const EditSample& s, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  save_obj(s.complete, (dir / "complete.obj").string());
  save_obj(dequantize(s.target), (dir / "target.obj").string());
  save_obj(dequantize(s.kept), (dir / "kept.obj").string());
  save_obj(dequantize(s.removed), (dir / "removed.obj").string());
  write_file_bytes((dir / "sketch.png").string(), encode_sketch_png(s.sketch));
  if (s.augmented_sketch.width() > 0)
    write_file_bytes((dir / "sketch_aug.png").string(), encode_sketch_png(s.augmented_sketch));
  std::ofstream meta(dir / "meta.json");
  meta << sample_meta(s, seed).dump(2) << '\n';
}

/// Keeps meshes whose triangulated face count is in [1, max_faces).
inline std::vector<std::string> filter_corpus(const std::vector<std::string>& paths, std::size_t max_faces = kMaxCorpusFaces) {
  std::vector<std::string> accepted;
  for (const auto& p : paths) {
    try {
      const auto m = load_obj(p);
      if (!m.empty() && m.size() < max_faces) accepted.push_back(p);
    } catch (const Error&) {
      // unreadable meshes are skipped
    }
  }
  return accepted;
}

inline std::vector<std::string> list_obj_files(const std::filesystem::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".obj") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

struct DatagenSummary {
  std::size_t corpus_accepted = 0;
  std::size_t written = 0;
  std::size_t rejected = 0;
};

/// Writes `count` samples to out/sample_NNNNNN. Sample i draws from corpus
/// mesh i mod |corpus| with its own RNG seeded by seed XOR i, so the output
/// does not depend on the number of worker threads.
inline DatagenSummary run_datagen(const std::vector<std::string>& corpus_paths, const std::filesystem::path& out_dir,
                                  std::size_t count, std::uint64_t seed, const DatagenConfig& cfg = {},
                                  unsigned threads = 0) {
  const auto accepted = filter_corpus(corpus_paths);
  if (accepted.empty()) throw Error("no corpus mesh passes the face-count filter");
  std::vector<RealMesh> corpus;
  for (const auto& p : accepted) corpus.push_back(normalize_to_unit_cube(load_obj(p)));

  DatagenSummary summary;
  summary.corpus_accepted = corpus.size();
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> written{0};
  std::atomic<std::size_t> rejected{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      const std::uint64_t sample_seed = seed ^ static_cast<std::uint64_t>(i);
      Rng rng(sample_seed);
      try {
        const auto sample = make_edit_sample(corpus[i % corpus.size()], rng, cfg);
        char name[32];
        std::snprintf(name, sizeof name, "sample_%06zu", i);
        write_sample(out_dir / name, sample, sample_seed);
        ++written;
      } catch (const SampleRejected&) {
        ++rejected;
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  summary.written = written;
  summary.rejected = rejected;
  return summary;
}

}  // namespace meshpad
