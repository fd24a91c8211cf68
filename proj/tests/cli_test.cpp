#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "meshpad/cli.hpp"

using namespace meshpad;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("meshpad_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  /// Runs the built binary; stdout and stderr go through files.
  Result exec(const std::string& args) const {
    const auto o = path("stdout.txt"), e = path("stderr.txt");
    const std::string cmd = std::string(MESHPAD_CLI_PATH) + " " + args + " >" + o.string() + " 2>" + e.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(o), slurp(e)};
  }

  fs::path write_obj(const std::string& name, const RealMesh& m) const {
    save_obj(m, path(name).string());
    return path(name);
  }

  fs::path dir_;
};

RealMesh two_boxes() {
  RealMesh m = procedural::box();
  RealMesh other = procedural::box({3, 0, 0}, {4, 1, 1});
  m.triangles.insert(m.triangles.end(), other.triangles.begin(), other.triangles.end());
  return m;
}

}  // namespace

TEST_F(CliTest, TokenizeDetokenizeRoundTrip) {
  Rng rng(1);
  const RealMesh chair = procedural::chair(rng);
  const auto obj = write_obj("chair.obj", chair);
  for (const std::string ext : {".tok", ".json"}) {
    const auto tok = path("chair" + ext);
    const auto back = path("back" + ext + ".obj");
    ASSERT_EQ(exec("tokenize " + obj.string() + " " + tok.string()).code, 0);
    ASSERT_EQ(exec("detokenize " + tok.string() + " " + back.string()).code, 0);
    const auto expected = quantize(normalize_to_unit_cube(chair));
    EXPECT_EQ(quantize(load_obj(back.string())), expected) << ext;
    EXPECT_EQ(tokenize(quantize(load_obj(back.string()))), tokenize(expected));
  }
  EXPECT_EQ(load_tokens(path("chair.tok").string()), tokenize(quantize(normalize_to_unit_cube(chair))));
}

TEST_F(CliTest, StatsReportsCounters) {
  const auto obj = write_obj("boxes.obj", two_boxes());
  const auto r = exec("stats " + obj.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["faces"], 24);
  EXPECT_EQ(j["components"], 2);
  EXPECT_EQ(j["nonmanifold_edge_fraction"], 0.0);
  EXPECT_EQ(j["self_intersections"], 0);
  EXPECT_LT(j["tokens"].get<int>(), j["naive_tokens"].get<int>());
  EXPECT_EQ(j["naive_tokens"], 2 + 24 * 9);
}

TEST_F(CliTest, BenchEmitsRatio) {
  const auto r = exec("bench --delay-ms 0 --runs 1 --jobs 2 --tokens 60");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_TRUE(j.contains("ratio"));
  EXPECT_GT(j["ratio"].get<double>(), 0.0);
  EXPECT_LT(j["passes_on"].get<int>(), j["passes_off"].get<int>());
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(exec("stats --no-such-flag x.obj").code, 2);
  EXPECT_EQ(exec("").code, 2);
  EXPECT_EQ(exec("frobnicate").code, 2);
  EXPECT_EQ(exec("--bins 1 stats x.obj").code, 2);
  const auto r = exec("tokenize " + path("missing.obj").string() + " out.tok");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, RuntimeErrorsExitOne) {
  std::ofstream(path("bad.obj")) << "v 0 0 0\nf 1 2 3\n";
  const auto r = exec("stats " + path("bad.obj").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error"), std::string::npos);
  std::ofstream(path("bad.tok"), std::ios::binary) << "xyz";
  EXPECT_EQ(exec("detokenize " + path("bad.tok").string() + " " + path("o.obj").string()).code, 1);
}

TEST_F(CliTest, SketchIsDeterministic) {
  Rng rng(2);
  const auto obj = write_obj("table.obj", procedural::table(rng));
  const std::string cam = "'{\"azimuth_deg\": 45, \"image_size\": 128}'";
  ASSERT_EQ(exec("sketch " + obj.string() + " " + path("a.png").string() + " --camera " + cam).code, 0);
  ASSERT_EQ(exec("sketch " + obj.string() + " " + path("b.png").string() + " --camera " + cam).code, 0);
  EXPECT_EQ(slurp(path("a.png")), slurp(path("b.png")));
  const auto s = decode_sketch_png(read_file_bytes(path("a.png").string()));
  EXPECT_EQ(s.width(), 128);
  EXPECT_GT(count(s.kept()), 0u);
  EXPECT_EQ(count(s.edit()), 0u);
}

TEST_F(CliTest, DatagenIsDeterministic) {
  fs::create_directories(path("corpus"));
  for (std::uint64_t i = 0; i < 4; ++i) {
    Rng rng(i);
    write_obj("corpus/m" + std::to_string(i) + ".obj", procedural::chair(rng));
  }
  const std::string base = "--seed 7 datagen --corpus " + path("corpus").string() + " --count 3 --out ";
  const auto a = exec(base + path("a").string());
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(exec(base + path("b").string() + " --threads 2").code, 0);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["written"], 3);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(path("a"))) {
    if (!e.is_regular_file()) continue;
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(path("b") / fs::relative(e.path(), path("a")))) << e.path();
  }
  EXPECT_GE(files, 9u);
}

TEST_F(CliTest, EditAddWithOracleAndDelete) {
  const auto box = quantize(normalize_to_unit_cube(procedural::box()));
  QuantizedMesh half(box.bins());
  for (const auto& t : box)
    if (t[0].x == 0 && t[1].x == 0 && t[2].x == 0) half.insert(t);
  const auto mesh = write_obj("half.obj", dequantize(half));
  const auto target = write_obj("box.obj", dequantize(box));
  const auto before = synth_sketch(half, QuantizedMesh(half.bins()), CameraPose{});
  SketchImage edited = before;
  for (int x = 2; x < 12; ++x) edited(x, 2) = StrokeClass::Edit;
  write_file_bytes(path("before.png").string(), encode_sketch_png(before));
  write_file_bytes(path("edited.png").string(), encode_sketch_png(edited));
  const std::string common = " --mesh " + mesh.string() + " --sketch " + path("before.png").string() + " --edited " +
                             path("edited.png").string() + " --raw --out ";
  const auto r = exec("edit --mode add --backend oracle --target " + target.string() + common + path("added.obj").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(quantize(load_obj(path("added.obj").string())), box);

  // Erasing every stroke of the half box removes all of it.
  SketchImage erased = before;
  for (int y = 0; y < erased.height(); ++y)
    for (int x = 0; x < erased.width(); ++x)
      if (erased(x, y) == StrokeClass::Kept) erased(x, y) = StrokeClass::Edit;
  write_file_bytes(path("edited.png").string(), encode_sketch_png(erased));
  ASSERT_EQ(exec("delete" + common + path("deleted.obj").string()).code, 0);
  EXPECT_TRUE(load_obj(path("deleted.obj").string()).empty());
}

TEST(CliInProcess, HelpAndStreams) {
  std::ostringstream out, err;
  const char* argv[] = {"meshpad", "--help"};
  EXPECT_EQ(cli::run(2, argv, out, err), 0);
  EXPECT_NE(out.str().find("tokenize"), std::string::npos);
  const char* bad[] = {"meshpad", "stats", "--bogus"};
  EXPECT_EQ(cli::run(3, bad, out, err), cli::kExitUsage);
}
