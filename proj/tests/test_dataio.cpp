#include "pirec/dataio.hpp"
#include "pirec/image.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace pirec;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("ingest splits 100 images 95/5 and is reproducible") {
  testing::TempDir dir("pirec-ingest");
  write_synthetic_shapes(dir / "img/a", {60, 32, 1});
  write_synthetic_shapes(dir / "img/b", {40, 32, 2});
  const DatasetIndex d = ingest(dir / "img", {"shapes", 32, 0.05, dir / "m1.json"});
  CHECK(d.count() == 100);
  CHECK(d.split(Split::Train).size() == 95);
  CHECK(d.split(Split::Validation).size() == 5);
  CHECK(d.skipped.empty());
  CHECK(std::is_sorted(d.items.begin(), d.items.end(),
                       [](const DatasetItem& a, const DatasetItem& b) { return a.path < b.path; }));
  CHECK(d.items.front().path == "a/shape_00000.png");

  const DatasetIndex again = ingest(dir / "img", {"shapes", 32, 0.05, dir / "m2.json"});
  CHECK(slurp(dir / "m1.json") == slurp(dir / "m2.json"));
  const DatasetIndex loaded = DatasetIndex::load(dir / "m1.json");
  CHECK(loaded.to_json() == d.to_json());
  CHECK(fs::exists(loaded.absolute_path(loaded.items[3])));
}

TEST_CASE("ingest reports corrupt files and rejects empty directories") {
  testing::TempDir dir("pirec-ingest");
  fs::create_directories(dir / "empty");
  CHECK_THROWS_WITH_AS(ingest(dir / "empty", {}), doctest::Contains("no images found"), std::runtime_error);
  CHECK_THROWS_AS(ingest(dir / "missing", {}), std::runtime_error);

  write_synthetic_shapes(dir / "mixed", {3, 32, 5});
  std::ofstream(dir / "mixed/broken.png") << "not a png";
  write_png(dir / "mixed/tiny.png", Tensor<float>(3, 4, 4, 0.5f));
  const DatasetIndex d = ingest(dir / "mixed", {"mixed", 32, 0.0, ""});
  CHECK(d.count() == 3);
  REQUIRE(d.skipped.size() == 2);
  CHECK(d.skipped[0].path == "broken.png");
  CHECK(d.skipped[1].path == "tiny.png");
  CHECK(fs::exists(dir / "mixed/manifest.json"));
}

TEST_CASE("normalize round trip stays on the 8-bit grid") {
  const Tensor<float> img = render_synthetic_shapes(24, 11);
  testing::TempDir dir("pirec-png");
  write_png(dir / "x.png", img);
  const Tensor<float> decoded = read_image(dir / "x.png");
  CHECK((decoded.matrix() - quantize_8bit(img).matrix()).cwiseAbs().maxCoeff() < 1e-6f);
  const Tensor<float> back = denormalize(normalize(decoded));
  CHECK((back.matrix() - img.matrix()).cwiseAbs().maxCoeff() <= 1.0f / 255.0f);
  CHECK(normalize(decoded).matrix().minCoeff() >= -1.0f);
  CHECK(normalize(decoded).matrix().maxCoeff() <= 1.0f);
}

TEST_CASE("samples have the expected shapes, ranges and determinism") {
  const Tensor<float> img = render_synthetic_shapes(48, 3);
  PreprocParams p;
  p.edge_dropout_prob = 0.0;
  p.seed = 4;
  SampleOptions o;
  o.image_size = 32;
  o.phase = Phase::Imitation;
  o.seed = 99;
  const auto s = make_sample_from_image<float>(img, p, o);
  CHECK(s.x_gt.shape_string() == "3x32x32");
  CHECK(s.edge.shape_string() == "1x32x32");
  CHECK(s.color_domain.shape_string() == "3x32x32");
  CHECK(s.mask.shape_string() == "1x32x32");
  CHECK(s.x_gt.matrix().minCoeff() >= -1.0f);
  CHECK(s.x_gt.matrix().maxCoeff() <= 1.0f);
  CHECK((s.edge.array() == 0.0f || s.edge.array() == 1.0f).all());
  CHECK((s.mask.array() == 0.0f || s.mask.array() == 1.0f).all());
  const double hidden = 1.0 - s.mask.matrix().mean();
  CHECK(hidden <= 0.7 + 1e-9);

  const auto again = make_sample_from_image<float>(img, p, o);
  CHECK(again.x_gt.matrix() == s.x_gt.matrix());
  CHECK(again.edge.matrix() == s.edge.matrix());
  CHECK(again.mask.matrix() == s.mask.matrix());

  o.phase = Phase::Generating;
  const auto s2 = make_sample_from_image<float>(img, p, o);
  CHECK(s2.mask.matrix().minCoeff() == 1.0f);

  o.training = false;
  const auto c1 = make_sample_from_image<float>(img, p, o);
  o.seed = 12345;
  const auto c2 = make_sample_from_image<float>(img, p, o);
  CHECK(c1.x_gt.matrix() == c2.x_gt.matrix());  // center crop ignores the seed
}

TEST_CASE("sample cache hits, and misses when preprocessing changes") {
  testing::TempDir dir("pirec-cache");
  write_synthetic_shapes(dir / "img", {4, 32, 8});
  const DatasetIndex d = ingest(dir / "img", {"c", 32, 0.0, dir / "m.json"});
  SampleCache cache(dir / "cache");
  PreprocParams p;
  p.seed = 1;
  SampleOptions o;
  o.image_size = 32;
  o.training = false;

  const auto first = cache.get(d, d.items[0], p, o, false);
  CHECK(cache.misses() == 1);
  CHECK(first.source == d.items[0].path);
  const auto second = cache.get(d, d.items[0], p, o, false);
  CHECK(cache.hits() == 1);
  CHECK(second.x_gt.matrix() == first.x_gt.matrix());
  CHECK(second.edge.matrix() == first.edge.matrix());
  CHECK(second.color_domain.matrix() == first.color_domain.matrix());
  CHECK(second.source == first.source);

  PreprocParams p2 = p;
  p2.canny_sigma = 2.0;
  CHECK(params_fingerprint(p2, o) != params_fingerprint(p, o));
  cache.get(d, d.items[0], p2, o, false);
  CHECK(cache.misses() == 2);
  SampleOptions o2 = o;
  o2.image_size = 16;
  CHECK(params_fingerprint(p, o2) != params_fingerprint(p, o));

  // HC bypasses the cache entirely.
  cache.get(d, d.items[1], p, o, true);
  CHECK(cache.hits() == 1);
  CHECK(cache.misses() == 2);
}

TEST_CASE("make_sample errors name the item") {
  testing::TempDir dir("pirec-err");
  write_synthetic_shapes(dir / "img", {2, 32, 8});
  const DatasetIndex d = ingest(dir / "img", {"c", 32, 0.0, dir / "m.json"});
  std::ofstream(d.absolute_path(d.items[1]), std::ios::trunc) << "garbage";
  CHECK_THROWS_WITH(make_sample<float>(d, d.items[1], PreprocParams{}, SampleOptions{}),
                    doctest::Contains(d.items[1].path.c_str()));
}

TEST_CASE("synthetic shapes are deterministic per seed") {
  const auto a = render_synthetic_shapes(32, 5), b = render_synthetic_shapes(32, 5), c = render_synthetic_shapes(32, 6);
  CHECK(a.matrix() == b.matrix());
  CHECK(a.matrix() != c.matrix());
  CHECK(a.matrix().minCoeff() >= 0.0f);
  CHECK(a.matrix().maxCoeff() <= 1.0f);
}
