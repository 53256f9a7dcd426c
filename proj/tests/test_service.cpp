#include "pirec/draft.hpp"
#include "pirec/image.hpp"
#include "pirec/service.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>
#include <httplib.h>

#include <thread>

using namespace pirec;

namespace {

GeneratorConfig toy_generator() {
  GeneratorConfig g;
  g.base_width = 4;
  g.residual_blocks = 1;
  return g;
}

DiscriminatorConfig toy_discriminator() {
  DiscriminatorConfig d;
  d.base_width = 4;
  d.strided_layers = 2;
  return d;
}

// Writes a checkpoint with untrained weights; phase 3 so both modes are served.
std::string write_toy_checkpoint(const testing::TempDir& dir, std::uint64_t seed = 1, Phase phase = Phase::Refinement) {
  GeneratorConfig gc = toy_generator();
  gc.seed = seed;
  Generator<float> g(gc);
  Discriminator<float> d(toy_discriminator());
  const std::string path = dir / ("model" + std::to_string(seed) + "_p" + std::to_string(to_int(phase)) + ".ckpt");
  save_model_checkpoint(path, g, d, phase, nlohmann::json::object());
  return path;
}

Tensor<float> stroke_edge(int h, int w) {
  Tensor<float> e(1, h, w);
  for (int y = 0; y < h; ++y) e(0, y, w / 3) = 1.0f;
  for (int x = 0; x < w; ++x) e(0, h / 2, x) = 1.0f;
  return e;
}

Tensor<float> flat_color(int h, int w, float r, float g, float b) {
  Tensor<float> c(3, h, w);
  c.matrix().row(0).setConstant(r);
  c.matrix().row(1).setConstant(g);
  c.matrix().row(2).setConstant(b);
  return c;
}

Tensor<float> two_tone(int h, int w) {
  Tensor<float> c = flat_color(h, w, 0.8f, 0.2f, 0.1f);
  for (int y = h / 2; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      c(0, y, x) = 0.1f;
      c(1, y, x) = 0.3f;
      c(2, y, x) = 0.9f;
    }
  return c;
}

}  // namespace

TEST_CASE("service loads models from a directory") {
  testing::TempDir dir("pirec-svc");
  write_toy_checkpoint(dir, 1, Phase::Generating);
  write_toy_checkpoint(dir, 1, Phase::Refinement);
  write_toy_checkpoint(dir, 2, Phase::Generating);
  ServiceOptions o;
  o.model_dir = dir.str();
  InferenceService svc(o);
  const auto j = svc.models_json();
  REQUIRE(j.at("models").size() == 2);
  for (const auto& m : j.at("models")) {
    if (m.at("model_id") == make_model_id("G", 1)) {
      CHECK(m.at("phase") == 3);
    } else {
      CHECK(m.at("phase") == 2);
    }
  }
  ServiceOptions missing;
  missing.model_dir = dir / "nope";
  CHECK_THROWS(InferenceService(missing));
}

TEST_CASE("reconstruct contract") {
  testing::TempDir dir("pirec-svc");
  ServiceOptions o;
  o.checkpoints = {write_toy_checkpoint(dir)};
  InferenceService svc(o);

  ReconstructRequest r;
  r.edge_png = encode_png(stroke_edge(32, 32));
  r.color_png = encode_png(two_tone(32, 32));
  const std::string a = svc.reconstruct(r), b = svc.reconstruct(r);
  CHECK(a == b);
  const Tensor<float> out = decode_image(a);
  CHECK(out.shape_string() == "3x32x32");

  r.mode = InferMode::Refine;
  CHECK(svc.reconstruct(r) != a);

  SUBCASE("degenerate input") {
    ReconstructRequest z;
    z.edge_png = encode_png(Tensor<float>(1, 32, 32));
    z.color_png = encode_png(flat_color(32, 32, 0.4f, 0.4f, 0.4f));
    for (auto mode : {InferMode::Generate, InferMode::Refine}) {
      z.mode = mode;
      const Tensor<float> img = decode_image(svc.reconstruct(z));
      CHECK(img.shape_string() == "3x32x32");
      CHECK(img.matrix().allFinite());
    }
  }
  SUBCASE("sizes off the downsampling grid are padded and cropped back") {
    ReconstructRequest odd;
    odd.edge_png = encode_png(stroke_edge(29, 37));
    odd.color_png = encode_png(two_tone(29, 37));
    CHECK(decode_image(svc.reconstruct(odd)).shape_string() == "3x29x37");
  }
  SUBCASE("anti-aliased strokes are binarized") {
    Tensor<float> soft = stroke_edge(32, 32);
    soft.matrix() *= 0.7f;  // still above threshold
    ReconstructRequest s = r;
    s.mode = InferMode::Generate;
    s.edge_png = encode_png(soft);
    CHECK(svc.reconstruct(s) == a);
  }
  SUBCASE("errors") {
    auto status_of = [&](const ReconstructRequest& req) {
      try {
        svc.reconstruct(req);
      } catch (const ServiceError& e) {
        return e.status();
      }
      return 200;
    };
    ReconstructRequest bad = r;
    bad.color_png = encode_png(two_tone(16, 32));
    CHECK(status_of(bad) == 422);
    bad = r;
    bad.edge_png = "garbage";
    CHECK(status_of(bad) == 422);
    bad = r;
    bad.model_id = "missing";
    CHECK(status_of(bad) == 409);
    CHECK_THROWS_AS(infer_mode_from_string("sideways"), ServiceError);
  }
}

TEST_CASE("interpolation contract") {
  testing::TempDir dir("pirec-svc");
  ServiceOptions o;
  o.checkpoints = {write_toy_checkpoint(dir)};
  InferenceService svc(o);
  const std::string edge = encode_png(stroke_edge(32, 32));
  const std::string ca = encode_png(two_tone(32, 32)), cb = encode_png(flat_color(32, 32, 0.2f, 0.7f, 0.3f));

  InterpolateRequest r;
  r.edge_png = edge;
  r.color_a_png = ca;
  r.color_b_png = cb;
  r.steps = 2;
  const auto ends = svc.interpolate(r);
  REQUIRE(ends.size() == 2);
  CHECK(ends[0].png == svc.reconstruct({edge, ca, InferMode::Generate, ""}));
  CHECK(ends[1].png == svc.reconstruct({edge, cb, InferMode::Generate, ""}));

  r.steps = 5;
  const auto five = svc.interpolate(r);
  REQUIRE(five.size() == 5);
  for (std::size_t i = 1; i < five.size(); ++i) CHECK(five[i].t > five[i - 1].t);
  CHECK(five.front().t == 0.0);
  CHECK(five.back().t == 1.0);

  for (int steps : {3, 4, 7}) {
    r.steps = steps;
    InterpolateRequest swapped = r;
    std::swap(swapped.color_a_png, swapped.color_b_png);
    const auto fwd = svc.interpolate(r), rev = svc.interpolate(swapped);
    for (int i = 0; i < steps; ++i) CHECK(fwd[static_cast<std::size_t>(i)].png == rev[static_cast<std::size_t>(steps - 1 - i)].png);
  }

  r.steps = 1;
  CHECK_THROWS_AS(svc.interpolate(r), ServiceError);

  const std::string body = encode_frames_multipart(five, "b0undary");
  const auto back = decode_frames_multipart(body, "b0undary");
  REQUIRE(back.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back[i].t == five[i].t);
    CHECK(back[i].png == five[i].png);
  }
}

TEST_CASE("concurrent requests match serial execution") {
  testing::TempDir dir("pirec-svc");
  ServiceOptions o;
  o.checkpoints = {write_toy_checkpoint(dir)};
  InferenceService svc(o);
  std::vector<ReconstructRequest> reqs;
  for (int i = 0; i < 4; ++i)
    reqs.push_back({encode_png(stroke_edge(32, 32 + 4 * i)), encode_png(two_tone(32, 32 + 4 * i)),
                    i % 2 ? InferMode::Refine : InferMode::Generate, ""});
  std::vector<std::string> serial;
  for (const auto& r : reqs) serial.push_back(svc.reconstruct(r));
  std::vector<std::string> parallel(reqs.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < reqs.size(); ++i)
    pool.emplace_back([&, i] { parallel[i] = svc.reconstruct(reqs[i]); });
  std::thread reloader([&] { svc.reload(); });
  for (auto& t : pool) t.join();
  reloader.join();
  CHECK(parallel == serial);
}

TEST_CASE("HTTP routes") {
  testing::TempDir dir("pirec-svc");
  ServiceOptions o;
  o.checkpoints = {write_toy_checkpoint(dir)};
  InferenceService svc(o);
  httplib::Server server;
  install_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client cli("127.0.0.1", port);
  auto health = cli.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(nlohmann::json::parse(health->body).at("models") == 1);
  auto models = cli.Get("/v1/models");
  REQUIRE(models);
  CHECK(nlohmann::json::parse(models->body).at("models").size() == 1);

  const std::string edge = encode_png(stroke_edge(32, 32)), color = encode_png(two_tone(32, 32));
  httplib::MultipartFormDataItems form = {{"edge", edge, "edge.png", "image/png"},
                                          {"color_domain", color, "color.png", "image/png"}};
  auto rec = cli.Post("/v1/reconstruct?phase=refine", form);
  REQUIRE(rec);
  CHECK(rec->status == 200);
  CHECK(rec->get_header_value("Content-Type") == "image/png");
  CHECK(rec->body == svc.reconstruct({edge, color, InferMode::Refine, ""}));

  auto unknown = cli.Post("/v1/reconstruct?model_id=zzz", form);
  REQUIRE(unknown);
  CHECK(unknown->status == 409);
  httplib::MultipartFormDataItems mismatched = {{"edge", edge, "edge.png", "image/png"},
                                                {"color_domain", encode_png(two_tone(16, 16)), "c.png", "image/png"}};
  auto bad = cli.Post("/v1/reconstruct", mismatched);
  REQUIRE(bad);
  CHECK(bad->status == 422);
  CHECK(nlohmann::json::parse(bad->body).contains("error"));
  auto missing = cli.Post("/v1/reconstruct", httplib::MultipartFormDataItems{{"edge", edge, "edge.png", "image/png"}});
  REQUIRE(missing);
  CHECK(missing->status == 422);

  httplib::MultipartFormDataItems iform = {{"edge", edge, "edge.png", "image/png"},
                                           {"color_a", color, "a.png", "image/png"},
                                           {"color_b", encode_png(flat_color(32, 32, 0.5f, 0.5f, 0.1f)), "b.png", "image/png"},
                                           {"steps", "4", "", ""}};
  auto interp = cli.Post("/v1/interpolate", iform);
  REQUIRE(interp);
  CHECK(interp->status == 200);
  const std::string ct = interp->get_header_value("Content-Type");
  const std::string boundary = ct.substr(ct.find("boundary=") + 9);
  const auto frames = decode_frames_multipart(interp->body, boundary);
  REQUIRE(frames.size() == 4);
  CHECK(frames[0].png == svc.reconstruct({edge, color, InferMode::Generate, ""}));

  server.stop();
  th.join();
}

TEST_CASE("draft export round trip") {
  Draft d;
  d.edge = stroke_edge(20, 24);
  d.color = two_tone(20, 24);
  d.color(1, 3, 5) = 37.0f / 255.0f;
  d.meta = {{"brush", {{"kind", "edge-pen"}, {"size", 3}}}, {"phase", "refine"}};
  const std::string zip = export_draft(d);
  CHECK(zip == export_draft(d));  // no timestamps
  const Draft back = import_draft(zip);
  CHECK(back.edge.matrix() == d.edge.matrix());
  CHECK((back.color.matrix() - quantize_8bit(d.color).matrix()).cwiseAbs().maxCoeff() < 1e-6f);
  CHECK(back.meta == d.meta);
  CHECK(export_draft(back) == zip);

  const auto files = unzip_files(zip);
  CHECK(files.count("edge.png") == 1);
  CHECK(files.count("color_domain.png") == 1);
  CHECK(nlohmann::json::parse(files.at("draft.json")).at("format") == "pirec-draft");

  std::string corrupt = zip;
  corrupt[zip.find("draft.json") + 20] ^= 0x5a;
  CHECK_THROWS(import_draft(corrupt));
  CHECK_THROWS(import_draft("not a zip"));
  Draft mismatched = d;
  mismatched.color = two_tone(10, 10);
  CHECK_THROWS_AS(export_draft(mismatched), std::invalid_argument);
}
