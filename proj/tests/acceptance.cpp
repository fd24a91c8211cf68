// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "meshpad/counting_model.hpp"
#include "meshpad/datagen.hpp"
#include "meshpad/deletion.hpp"
#include "meshpad/editgen.hpp"
#include "meshpad/procedural.hpp"
#include "meshpad/service.hpp"

using namespace meshpad;
using clk = std::chrono::steady_clock;

namespace {

double seconds_since(clk::time_point t0) { return std::chrono::duration<double>(clk::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = clk::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.2fs", seconds_since(t0));
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << secs << ") " << o.detail << std::endl;
  failures += !o.pass;
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

/// Codec corpus: 1..768 faces, styles mixed between manifold sheets, soups and fans.
std::vector<QuantizedMesh> codec_corpus() {
  Rng rng(2024);
  std::vector<QuantizedMesh> out;
  for (int i = 0; i < 1000; ++i)
    out.push_back(procedural::random_mesh(rng, kDefaultBins, static_cast<std::size_t>(uniform_int(rng, 1, 768)), i % 3));
  return out;
}

std::size_t count_controls(std::span<const Token> f) {
  return static_cast<std::size_t>(std::count_if(f.begin(), f.end(), [](const Token& t) { return t.is_control(); }));
}

bool pass_law_holds(const DecodeTrace& t, bool speculate) {
  const std::size_t controls = count_controls(t.tokens);
  const std::size_t vertices = (t.tokens.size() - controls) / 3;
  if (t.n_control != controls || t.n_vertices != vertices) return false;
  return t.model_forward_passes == (speculate ? controls + vertices : controls + 3 * vertices);
}

/// Datagen samples shared by the datagen, sketch and replay criteria.
struct SamplePool {
  std::vector<EditSample> samples;
  std::vector<std::uint64_t> seeds;
  std::size_t rejected = 0;
};

SamplePool make_samples(std::size_t n) {
  const auto corpus = procedural::toy_corpus(50, 77);
  SamplePool pool;
  for (std::uint64_t seed = 0; pool.samples.size() < n; ++seed) {
    Rng rng(seed);
    try {
      pool.samples.push_back(make_edit_sample(corpus[seed % corpus.size()], rng));
      pool.seeds.push_back(seed);
    } catch (const SampleRejected&) {
      ++pool.rejected;
    }
  }
  return pool;
}

// ---------------------------------------------------------------------------

Outcome codec_round_trip(const std::vector<QuantizedMesh>& corpus) {
  const auto t0 = clk::now();
  std::size_t ok = 0;
  for (const auto& m : corpus) ok += detokenize(tokenize(m)) == m;
  const double t = seconds_since(t0);
  return {ok == corpus.size() && t < 10.0, std::to_string(ok) + "/" + std::to_string(corpus.size()) + " exact, " + fmt(t, 2) + "s (limit 10s)"};
}

Outcome token_arithmetic(const std::vector<QuantizedMesh>& corpus) {
  std::size_t ok = 0;
  for (const auto& m : corpus) {
    const auto chains = build_chains(m);
    std::size_t verts = 0;
    for (const auto& c : chains) verts += c.vertices.size();
    ok += tokenize(m).size() == 2 + (chains.size() - 1) + 3 * verts;
  }
  QuantizedMesh strip(kDefaultBins);
  auto v = [](int k) { return QuantizedVertex{k % 2, 0, k}; };
  for (int k = 2; k < 10; ++k) strip.insert(v(k - 2), v(k - 1), v(k));
  const auto stats = compression_stats(strip);
  const bool fixture = strip.size() == 8 && stats.tokens == 32 && stats.naive_tokens == 74;
  return {ok == corpus.size() && fixture, "formula exact on " + std::to_string(ok) + "/" + std::to_string(corpus.size()) +
                                              ", 8-triangle strip " + std::to_string(stats.tokens) + " vs " +
                                              std::to_string(stats.naive_tokens) + " naive (expect 32 vs 74)"};
}

Outcome set_identities() {
  Rng rng(5);
  std::size_t ok = 0;
  const std::size_t n = 500;
  for (std::size_t trial = 0; trial < n; ++trial) {
    const auto m = procedural::random_mesh(rng, 64, static_cast<std::size_t>(uniform_int(rng, 1, 300)));
    VertexSet doomed;
    const int rate = uniform_int(rng, 1, 10);
    for (const auto& vtx : m.vertices())
      if (uniform_int(rng, 0, rate) == 0) doomed.insert(vtx);
    const auto r = prune(m, doomed);
    // scan oracle over the triangle list
    QuantizedMesh removed(64), kept(64);
    for (const auto& t : m) {
      bool hit = false;
      for (const auto& vtx : t) hit = hit || doomed.count(vtx) > 0;
      (hit ? removed : kept).insert(t);
    }
    const bool partition = intersection(r.removed, r.kept).empty() && merge(r.removed, r.kept) == m;
    const bool scan = r.removed == removed && r.kept == kept;
    const bool merge_identity = merge(r.kept, r.removed) == m && merge(prune(merge(r.kept, r.removed), doomed).kept, r.removed) == m;
    ok += partition && scan && merge_identity;
  }
  return {ok == n, std::to_string(ok) + "/" + std::to_string(n) + " pairs satisfy partition, scan and prune/merge identity"};
}

Outcome datagen_invariants(const SamplePool& pool) {
  Rng pts(9);
  std::size_t partition_bad = 0, mc_violations = 0, param_bad = 0, contain_bad = 0;
  const std::size_t mc_points = 100000;
  for (const auto& s : pool.samples) {
    partition_bad += !intersection(s.kept, s.removed).empty() || merge(s.kept, s.removed) != s.target;
    for (const auto* r : {&s.volumes.region_a, &s.volumes.region_b})
      param_bad += r->a < kParamAMin || r->a > kParamAMax || r->b < kParamBMin || r->b > kParamBMax ||
                   r->c < kParamCMin || r->c > kParamCMax;
    bool b_escapes = false;
    for (std::size_t i = 0; i < mc_points; ++i) {
      const Vec3 p{uniform(pts, -0.5, 1.5), uniform(pts, -0.5, 1.5), uniform(pts, -0.5, 1.5)};
      if (s.volumes.kept.contains(p) && !s.target_volume.contains(p)) ++mc_violations;
      if (s.volumes.region_b.contains(p) && !s.volumes.region_a.contains(p)) b_escapes = true;
    }
    contain_bad += s.volumes.b_inside_a == b_escapes;
  }
  const std::size_t n = pool.samples.size();
  return {partition_bad == 0 && mc_violations == 0 && param_bad == 0 && contain_bad == 0,
          std::to_string(n) + " samples (" + std::to_string(pool.rejected) + " rejected draws): partition failures " +
              std::to_string(partition_bad) + ", L_k outside L " + std::to_string(mc_violations) + " of " +
              std::to_string(n * mc_points) + " points, parameter range failures " + std::to_string(param_bad) +
              ", containment disagreements " + std::to_string(contain_bad)};
}

Outcome sketch_partition(const SamplePool& pool) {
  const std::size_t n = 200;
  std::size_t bad = 0, edit_pixels = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = pool.samples[i];
    const auto layers = synth_sketch_layers(s.target, s.removed, s.camera);
    const Bitmap edit = layers.sketch.edit(), kept = layers.sketch.kept();
    const Bitmap strokes = stroke_edges(rasterize(s.target, s.camera));
    // independent visibility: face id buffer of the target, faces looked up in M_r
    const auto buf = rasterize(s.target, s.camera);
    const std::vector<Triangle> faces(s.target.begin(), s.target.end());
    auto removed_at = [&](int x, int y) {
      if (!buf.face.contains(x, y)) return false;
      const int f = buf.face(x, y);
      return f >= 0 && s.removed.contains(faces[static_cast<std::size_t>(f)]);
    };
    bool ok = layers.sketch == s.sketch;
    for (int y = 0; y < edit.height() && ok; ++y)
      for (int x = 0; x < edit.width(); ++x) {
        if (edit(x, y) && kept(x, y)) ok = false;
        if ((edit(x, y) || kept(x, y)) != static_cast<bool>(strokes(x, y))) ok = false;
        if (!edit(x, y)) continue;
        ++edit_pixels;
        bool near = false;
        for (int dy = -1; dy <= 1 && !near; ++dy)
          for (int dx = -1; dx <= 1 && !near; ++dx) near = removed_at(x + dx, y + dy);
        if (!near) ok = false;
      }
    bad += !ok;
  }
  return {bad == 0, std::to_string(n - bad) + "/" + std::to_string(n) + " samples exact (" + std::to_string(edit_pixels) +
                        " edit pixels checked against the dilated visibility mask)"};
}

Outcome speculation_law(const SamplePool& pool) {
  const auto t0 = clk::now();
  std::size_t decodes = 0, law_ok = 0, identical = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& s = pool.samples[i];
    const auto prompt = addition_prompt(s.kept);
    const auto oracle = oracle_model(addition_target(s.kept, s.removed));
    DecodeConfig cfg;
    cfg.max_tokens = 1u << 20;
    cfg.speculate = false;
    const auto off = generate_addition(*oracle.model, oracle.speculator.get(), prompt, {}, cfg);
    cfg.speculate = true;
    const auto on = generate_addition(*oracle.model, oracle.speculator.get(), prompt, {}, cfg);
    decodes += 2;
    law_ok += pass_law_holds(off, false) + pass_law_holds(on, true);
    identical += on.tokens == off.tokens;
  }

  const auto cases = procedural::addition_workload(8, 0);
  std::vector<OraclePair> oracles;
  std::vector<DecodeJob> jobs;
  for (const auto& c : cases) oracles.push_back(oracle_model(addition_target(c.kept, c.added)));
  for (std::size_t i = 0; i < cases.size(); ++i)
    jobs.push_back({oracles[i].model.get(), oracles[i].speculator.get(), addition_prompt(cases[i].kept)});
  const auto bench = bench_decode(jobs, DecodeConfig{}, std::chrono::microseconds(1000), 1, 300);
  const bool full_length = bench.on.tokens == bench.off.tokens && bench.on.tokens >= jobs.size() * 298;
  const double elapsed = seconds_since(t0);
  const bool pass = law_ok == decodes && identical == 100 && full_length && bench.ratio >= 1.8 && bench.ratio <= 3.0 &&
                    elapsed < 60.0;
  return {pass, "law exact on " + std::to_string(law_ok) + "/" + std::to_string(decodes) + " decodes, on/off identical " +
                    std::to_string(identical) + "/100; 1 ms delay, " + std::to_string(jobs.size()) + " jobs x 300 tokens: " +
                    fmt(bench.on.tokens_per_second, 1) + " vs " + fmt(bench.off.tokens_per_second, 1) + " tok/s, speedup " +
                    fmt(bench.ratio, 2) + " (target [1.8, 3.0]), passes " + std::to_string(bench.on.passes) + " vs " +
                    std::to_string(bench.off.passes) + ", " + fmt(elapsed, 1) + "s (limit 60s)"};
}

Outcome edit_replay(const SamplePool& pool) {
  std::size_t exact = 0;
  std::size_t hits = 0, positives = 0, depth_hits = 0, depth_positives = 0;
  const std::size_t n = 100;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = pool.samples[i];
    const auto prompt = addition_prompt(s.kept);
    const auto oracle = oracle_model(addition_target(s.kept, s.removed));
    DecodeConfig cfg;
    cfg.speculate = true;
    cfg.max_tokens = 1u << 20;
    const auto trace = generate_addition(*oracle.model, oracle.speculator.get(), prompt, {}, cfg);
    exact += !trace.truncated && merge(s.kept, decode_continuation(prompt.tokens, trace.tokens, s.kept.bins())) == s.target;

    const auto buffers = rasterize(s.target, s.camera);
    GeometricDeletionParams params;
    params.depth_test = true;
    const auto predicted = geometric_labels_from_strokes(s.target, s.sketch.edit(), s.camera, buffers, params);
    const auto truth = oracle_labels_from_volume(s.target, s.removed);
    const auto region = dilate(visibility_mask(s.removed, s.target, buffers), 1);
    const View view(s.camera);
    const double tol = default_depth_tolerance(s.target);
    for (const auto& [v, label] : truth) {
      if (label != VertexLabel::Delete) continue;
      const Vec3 p = dequantize_point(v, s.target.bins());
      if (!vertex_visible(view, buffers, p, tol)) continue;
      const bool hit = predicted.at(v) == VertexLabel::Delete;
      ++depth_positives;
      depth_hits += hit;
      const ScreenPoint sp = view.project(p);
      const int x = static_cast<int>(std::floor(sp.x)), y = static_cast<int>(std::floor(sp.y));
      if (!region.contains(x, y) || !region(x, y)) continue;
      ++positives;
      hits += hit;
    }
  }
  const double recall = positives ? static_cast<double>(hits) / static_cast<double>(positives) : 0.0;
  const double depth_recall = depth_positives ? static_cast<double>(depth_hits) / static_cast<double>(depth_positives) : 0.0;
  return {exact == n && recall >= 0.9,
          "addition exact " + std::to_string(exact) + "/" + std::to_string(n) + "; delete recall on visible vertices " +
              std::to_string(hits) + "/" + std::to_string(positives) + " = " + fmt(recall) +
              " (target >= 0.9); depth-test-only visibility " + std::to_string(depth_hits) + "/" +
              std::to_string(depth_positives) + " = " + fmt(depth_recall)};
}

Outcome counting_sanity() {
  const auto corpus = procedural::toy_corpus(50, 11);
  std::vector<TokenSequence> train, prompts;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Rng fit_rng(1000 + i);
    const auto s = make_edit_sample(corpus[i], fit_rng);
    train.push_back(addition_target(s.kept, s.removed));
    Rng held_rng(5000 + i);
    prompts.push_back(addition_prompt(make_edit_sample(corpus[i], held_rng).kept));
  }
  auto model = fit_counting_model(train, 6);
  auto rate = [&] {
    std::size_t valid = 0;
    for (const auto& p : prompts) {
      const auto trace = generate_addition(model, nullptr, p, {}, DecodeConfig{});
      valid += !trace.truncated && validate(join_fragment(p, trace.tokens)).empty();
    }
    return valid;
  };
  const std::size_t with_stop = rate();
  model.set_end_on_repeat(false);
  const std::size_t without_stop = rate();
  const double frac = static_cast<double>(with_stop) / static_cast<double>(prompts.size());
  return {frac >= 0.95, "order 6, 50-mesh corpus, greedy on held-out prompts: " + std::to_string(with_stop) + "/50 valid (target >= 0.95); without repeat stop " +
                            std::to_string(without_stop) + "/50"};
}

Outcome service_contract() {
  using namespace meshpad::service;
  const auto box = quantize(normalize_to_unit_cube(procedural::box()));
  QuantizedMesh half(box.bins());
  for (const auto& t : box)
    if (t[0].x == 0 && t[1].x == 0 && t[2].x == 0) half.insert(t);
  ServiceConfig cfg;
  cfg.backend = std::make_shared<OracleBackend>(box);
  SessionStore store(cfg);
  httplib::Server server;
  install_routes(server, store);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client c("127.0.0.1", port);
  c.set_read_timeout(120, 0);
  auto post = [&](const std::string& path, const nlohmann::json& body) {
    auto r = c.Post(path, body.dump(), "application/json");
    return std::make_pair(r ? r->status : -1, r ? r->body : std::string());
  };
  auto edit = [](const std::string& kind, const SketchImage& s) {
    return nlohmann::json{{"kind", kind}, {"sketch", base64_encode(encode_sketch_png(s))}};
  };
  auto png_sketch = [&](const std::string& id) {
    auto r = c.Get("/sessions/" + id + "/sketch.png");
    return decode_sketch_png({r->body.begin(), r->body.end()});
  };

  bool atomic = true, fresh = true, undo = true;
  const auto [code, body] = post("/sessions", {{"obj", base64_encode(to_obj_string(dequantize(half)))}, {"normalize", false}});
  const std::string id = code == 201 ? nlohmann::json::parse(body)["id"].get<std::string>() : "";
  const auto initial = store.get(id);

  // rejected requests: no edit strokes, wrong size, add over strokes, erase off strokes
  SketchImage over = initial.sketch, off_stroke = initial.sketch, add = initial.sketch;
  for (int y = 0; y < over.height(); ++y)
    for (int x = 0; x < over.width(); ++x)
      if (over(x, y) == StrokeClass::Kept) over(x, y) = StrokeClass::Edit;
  for (int x = 2; x < 12; ++x) off_stroke(x, 2) = add(x, 2) = StrokeClass::Edit;
  const std::vector<nlohmann::json> bad{edit("add", initial.sketch), edit("add", SketchImage(32, 32)), edit("add", over),
                                        edit("delete", off_stroke)};
  for (const auto& b : bad) atomic = atomic && post("/sessions/" + id + "/edits", b).first == 422 && store.get(id) == initial;

  std::vector<SessionState> states{initial};
  for (int step = 0; step < 4; ++step) {
    const auto cur = store.get(id);
    SketchImage req = cur.sketch;
    std::string kind = "add";
    if (step % 2 == 0) {
      for (int x = 2; x < 12; ++x) req(x, 2 + step) = StrokeClass::Edit;
    } else {
      kind = "delete";
      for (int y = 0; y < req.height() / 2; ++y)
        for (int x = 0; x < req.width(); ++x)
          if (req(x, y) == StrokeClass::Kept) req(x, y) = StrokeClass::Edit;
    }
    if (post("/sessions/" + id + "/edits", edit(kind, req)).first != 200) fresh = false;
    const auto after = store.get(id);
    fresh = fresh && png_sketch(id) == SessionStore::fresh_sketch(after.mesh, after.camera) && after.sketch == png_sketch(id);
    states.push_back(after);
  }
  const bool reached_fixture = states[1].mesh == box;
  for (std::size_t k = states.size() - 1; k > 0; --k)
    undo = undo && post("/sessions/" + id + "/undo", nlohmann::json::object()).first == 200 && store.get(id) == states[k - 1];
  undo = undo && post("/sessions/" + id + "/undo", nlohmann::json::object()).first == 409 && store.get(id) == initial;
  server.stop();
  th.join();
  return {atomic && fresh && undo && reached_fixture,
          std::string("atomicity ") + (atomic ? "ok" : "broken") + ", freshness " + (fresh ? "ok" : "broken") + ", " +
              std::to_string(states.size() - 1) + "-undo " + (undo ? "ok" : "broken") + ", oracle add reached fixture " +
              (reached_fixture ? "yes" : "no")};
}

}  // namespace

int main() {
  const auto corpus = codec_corpus();
  report("codec_round_trip", [&] { return codec_round_trip(corpus); });
  report("token_arithmetic", [&] { return token_arithmetic(corpus); });
  report("prune_merge_set_identities", set_identities);
  const SamplePool pool = make_samples(1000);
  report("datagen_invariants", [&] { return datagen_invariants(pool); });
  report("sketch_partition", [&] { return sketch_partition(pool); });
  report("speculation_pass_count_law", [&] { return speculation_law(pool); });
  report("end_to_end_edit_replay", [&] { return edit_replay(pool); });
  report("counting_model_sanity", counting_sanity);
  report("service_contract", service_contract);
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << failures << " failing criteria" << std::endl;
  return failures ? 1 : 0;
}
