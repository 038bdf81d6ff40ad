#include "frameflow/checkpoint.hpp"
#include "frameflow/filter_banks.hpp"
#include "frameflow/runner.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace frameflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("frameflow_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

GrayImage image(Index w, Index h, std::function<double(Index, Index)> f, int max_value = 255) {
  GrayImage img;
  img.width = w;
  img.height = h;
  img.max_value = max_value;
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) img.pixels.push_back(f(r, c));
  return img;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("pgm round trip at 8 and 16 bits") {
  TempDir dir("pgm");
  const GrayImage a = image(5, 3, [](Index r, Index c) { return static_cast<double>(r * 50 + c * 7); });
  write_pgm(dir.path / "a.pgm", a);
  const GrayImage a2 = read_pgm(dir.path / "a.pgm");
  CHECK(a2.width == 5);
  CHECK(a2.height == 3);
  CHECK(a2.pixels == a.pixels);

  const GrayImage b = image(4, 2, [](Index r, Index c) { return static_cast<double>(r * 30000 + c * 1000); }, 65535);
  write_pgm(dir.path / "b.pgm", b);
  const GrayImage b2 = read_pgm(dir.path / "b.pgm");
  CHECK(b2.max_value == 65535);
  CHECK(b2.pixels == b.pixels);
}

TEST_CASE("pgm header comments and bad files") {
  TempDir dir("pgm_bad");
  {
    std::ofstream out(dir.path / "c.pgm", std::ios::binary);
    out << "P5\n# comment line\n2 1\n# another\n255\n";
    out.put(static_cast<char>(10));
    out.put(static_cast<char>(200));
  }
  const GrayImage c = read_pgm(dir.path / "c.pgm");
  CHECK(c.pixels == std::vector<double>{10, 200});
  {
    std::ofstream out(dir.path / "d.pgm", std::ios::binary);
    out << "P2\n2 1\n255\n1 2\n";
  }
  CHECK_THROWS(read_pgm(dir.path / "d.pgm"));
  {
    std::ofstream out(dir.path / "e.pgm", std::ios::binary);
    out << "P5\n4 4\n255\n";
    out.put('x');
  }
  CHECK_THROWS(read_pgm(dir.path / "e.pgm"));
  CHECK_THROWS(read_pgm(dir.path / "missing.pgm"));
}

TEST_CASE("loader: empty directory is an error") {
  TempDir dir("empty");
  CHECK_THROWS(load_images(dir.path, {4, 4}, Normalization::none));
}

TEST_CASE("loader: constant image under global [0,1]") {
  TempDir dir("const");
  write_pgm(dir.path / "k.pgm", image(4, 4, [](Index, Index) { return 128.0; }));
  const Dataset d = load_images(dir.path, {4, 4}, Normalization::global01);
  REQUIRE(d.size() == 1);
  for (Index i = 0; i < 16; ++i) CHECK(d.items[0][i] == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
}

TEST_CASE("halving resize equals 2x2 block means") {
  const GrayImage img = image(8, 8, [](Index r, Index c) { return static_cast<double>((r * 13 + c * 29) % 17); });
  const Signal out = crop_and_resize(img, 4, 4);
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 4; ++c) {
      const auto p = [&](Index rr, Index cc) { return img.pixels[static_cast<std::size_t>(rr * 8 + cc)]; };
      const double block = (p(2 * r, 2 * c) + p(2 * r, 2 * c + 1) + p(2 * r + 1, 2 * c) + p(2 * r + 1, 2 * c + 1)) / 4;
      CHECK(out(r, c) == doctest::Approx(block).epsilon(1e-14));
    }
}

TEST_CASE("wide images are center-cropped") {
  // 12 wide, 8 high -> central 8x8 window starting at column 2.
  const GrayImage img = image(12, 8, [](Index r, Index c) { return static_cast<double>(r * 12 + c); });
  const Signal same = crop_and_resize(img, 8, 8);
  for (Index r = 0; r < 8; ++r)
    for (Index c = 0; c < 8; ++c) CHECK(same(r, c) == static_cast<double>(r * 12 + c + 2));
  CHECK_THROWS_AS(crop_and_resize(img, 9, 9), ShapeError);
}

TEST_CASE("loader order and determinism") {
  TempDir dir("order");
  write_pgm(dir.path / "b.pgm", image(4, 4, [](Index, Index) { return 20.0; }));
  write_pgm(dir.path / "a.pgm", image(4, 4, [](Index, Index) { return 10.0; }));
  write_pgm(dir.path / "c.pgm", image(4, 4, [](Index, Index) { return 30.0; }));
  std::ofstream(dir.path / "notes.txt") << "ignored";
  const Dataset d1 = load_images(dir.path, {4, 4}, Normalization::none);
  const Dataset d2 = load_images(dir.path, {4, 4}, Normalization::none);
  REQUIRE(d1.size() == 3);
  CHECK(d1.items[0][0] == 10.0);
  CHECK(d1.items[2][0] == 30.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(d1.items[i] == d2.items[i]);
}

TEST_CASE("normalization") {
  Dataset d = synth_texture("checker", {8, 8}, 1, 4);
  d.normalize(Normalization::per_image);
  for (const auto& x : d.items) {
    CHECK(std::abs(x.values().mean()) < 1e-12);
    const double var = (x.values().array() - x.values().mean()).square().mean();
    CHECK(var == doctest::Approx(1).epsilon(1e-12));
  }
  CHECK_THROWS(d.normalize(Normalization::global01));

  Dataset g = synth_texture("noise", {8, 8}, 1, 4);
  g.normalize(Normalization::global01);
  double lo = 1, hi = 0;
  for (const auto& x : g.items) {
    lo = std::min(lo, x.values().minCoeff());
    hi = std::max(hi, x.values().maxCoeff());
  }
  CHECK(lo == 0);
  CHECK(hi == 1);
  CHECK(parse_normalization("per_image") == Normalization::per_image);
  CHECK_THROWS(parse_normalization("zscore"));
}

TEST_CASE("generators are seeded") {
  for (const char* kind : {"stripes", "checker", "noise"}) {
    const Dataset a = synth_texture(kind, {16, 16}, 5, 3);
    const Dataset b = synth_texture(kind, {16, 16}, 5, 3);
    const Dataset c = synth_texture(kind, {16, 16}, 6, 3);
    CHECK(a.size() == 3);
    CHECK(a.items[1] == b.items[1]);
    CHECK_FALSE(a.items[1] == c.items[1]);
    CHECK(a.shape() == Shape{16, 16});
  }
  CHECK_THROWS(synth_texture("clouds", {8, 8}, 1, 1));
}

TEST_CASE("gaussian mixture mean") {
  const std::vector<MixtureComponent> comps{{-2.0, 0.5, 1.0}, {2.0, 0.5, 3.0}};
  const std::size_t count = 4000;
  const Dataset d = gaussian_mixture(1, comps, 3, count);
  double mean = 0;
  for (const auto& x : d.items) mean += x[0];
  mean /= count;
  // Mixture mean 1, variance 0.25 + 3 = 3.25.
  CHECK(std::abs(mean - 1.0) < 5 * std::sqrt(3.25 / count));
  CHECK(gaussian_mixture(4, comps, 3, 5).items[2] == gaussian_mixture(4, comps, 3, 5).items[2]);
  CHECK_THROWS(gaussian_mixture(4, {}, 3, 5));
}

TEST_CASE("sample grid export") {
  TempDir dir("grid");
  std::vector<Signal> batch;
  for (int i = 0; i < 5; ++i) batch.push_back(Signal(Shape{3, 4}, Vector<double>::Constant(12, i)));
  const GridMapping m = export_sample_grid(batch, dir.path / "g.pgm", 3);
  const GrayImage img = read_pgm(dir.path / "g.pgm");
  CHECK(img.width == 3 * 5 - 1);
  CHECK(img.height == 2 * 4 - 1);
  CHECK(m.lo == 0);
  CHECK(m.hi == 4);
  CHECK(img.pixels[0] == 0);
  CHECK(img.pixels[4] == 255);                                        // vertical separator
  CHECK(img.pixels[static_cast<std::size_t>(3 * img.width)] == 255);  // horizontal separator
  CHECK(img.pixels[static_cast<std::size_t>(4 * img.width + 5)] == 255);  // item 4, value 4
  CHECK(slurp(dir.path / "g.pgm.map.txt").find("scale 63.75") != std::string::npos);

  std::vector<Signal> rows{Signal::from_list({3}, {0, 1, 2})};
  export_sample_grid(rows, dir.path / "r.pgm");
  CHECK(read_pgm(dir.path / "r.pgm").height == 1);
}

TEST_CASE("atomic writes leave no temporary files") {
  TempDir dir("atomic");
  write_file_atomic(dir.path / "sub" / "x.txt", "hello");
  CHECK(slurp(dir.path / "sub" / "x.txt") == "hello");
  write_file_atomic(dir.path / "sub" / "x.txt", "bye");
  CHECK(slurp(dir.path / "sub" / "x.txt") == "bye");
  CHECK(std::distance(fs::directory_iterator(dir.path / "sub"), fs::directory_iterator()) == 1);
}

TEST_CASE("checkpoint document fields") {
  RunConfig cfg = RunConfig::resolve(nlohmann::json::object(), {"learner.iters=2", "sampler.steps_per_iter=5"});
  const RunResult r = run_training(cfg);
  const nlohmann::json doc = save_checkpoint(make_checkpoint(cfg, r.state));
  CHECK(doc.at("version") == kCheckpointVersion);
  for (const char* key : {"kernels", "biases", "theta", "ref_variance", "kind", "seed"}) CHECK(doc.at("bank").contains(key));
  for (const char* key : {"shape", "values", "iteration", "rng"}) CHECK(doc.at("chains").contains(key));
  for (const char* key : {"mode", "config", "iteration"}) CHECK(doc.at("learner").contains(key));
  CHECK(doc.at("config") == cfg.to_json());
  CHECK_THROWS(load_checkpoint(nlohmann::json{{"format", "other"}}));
}

TEST_CASE("checkpoint resume equals the uninterrupted run") {
  const std::vector<std::vector<std::string>> configs{
      {"mode=\"wframe\"", "learner.beta=0.00002", "sampler.init=\"gaussian\""},
      {"mode=\"frame\"", "learner.clip_lo=-0.05", "learner.clip_hi=0.05", "learner.lambda=0.003"},
      {"mode=\"wframe\"", "learner.gamma=0.3", "learner.beta=0.00001", "data.source=\"checker\"", "bank.kind=\"random\""},
  };
  TempDir dir("resume");
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::vector<std::string> o = configs[i];
    o.insert(o.end(), {"learner.iters=12", "sampler.steps_per_iter=20", "seed=" + std::to_string(i + 3)});
    const RunConfig full_cfg = RunConfig::resolve(nlohmann::json::object(), o);
    const RunResult full = run_training(full_cfg);

    o.push_back("learner.iters=5");
    const RunConfig part_cfg = RunConfig::resolve(nlohmann::json::object(), o);
    const RunResult part = run_training(part_cfg);
    Checkpoint ckpt = make_checkpoint(part_cfg, part.state);
    const fs::path path = dir.path / ("c" + std::to_string(i) + ".json");
    write_checkpoint(path, ckpt);
    Checkpoint loaded = read_checkpoint(path);
    loaded.learner.iters = 12;
    const RunResult resumed = resume_training(loaded, full_cfg.make_dataset());

    CHECK(resumed.state.bank.theta() == full.state.bank.theta());
    CHECK(resumed.state.chains.chains == full.state.chains.chains);
    CHECK(resumed.state.chains.rng == full.state.chains.rng);
    CHECK(resumed.state.trace == full.state.trace);
    CHECK(resumed.state.trace.to_csv() == full.state.trace.to_csv());
  }
}
