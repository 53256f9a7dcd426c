#include "pirec/service.hpp"

#include "pirec/image.hpp"
#include "pirec/preproc.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace pirec {

InferMode infer_mode_from_string(const std::string& s) {
  if (s.empty() || s == "generate") return InferMode::Generate;
  if (s == "refine") return InferMode::Refine;
  throw ServiceError(422, "phase must be 'generate' or 'refine', got '" + s + "'");
}

const char* infer_mode_name(InferMode m) { return m == InferMode::Refine ? "refine" : "generate"; }

ServiceOptions ServiceOptions::from_environment() {
  ServiceOptions o;
  if (const char* dir = std::getenv("PIREC_MODEL_DIR")) o.model_dir = dir;
  return o;
}

InferenceService::InferenceService(ServiceOptions options) : options_(std::move(options)) {
  if (options_.model_dir.empty()) {
    if (const char* dir = std::getenv("PIREC_MODEL_DIR")) options_.model_dir = dir;
  }
  if (options_.median_blur_kernel < 0 || (options_.median_blur_kernel > 0 && options_.median_blur_kernel % 2 == 0))
    throw std::invalid_argument("median_blur_kernel must be 0 or odd");
  reload();
}

void InferenceService::reload() {
  std::lock_guard<std::mutex> one_at_a_time(reload_mutex_);
  std::vector<std::string> paths = options_.checkpoints;
  if (!options_.model_dir.empty()) {
    if (!fs::is_directory(options_.model_dir))
      throw std::runtime_error("model directory does not exist: " + options_.model_dir);
    std::vector<std::string> found;
    for (const auto& e : fs::directory_iterator(options_.model_dir))
      if (e.is_regular_file() && e.path().extension() == ".ckpt") found.push_back(e.path().string());
    std::sort(found.begin(), found.end());
    paths.insert(paths.end(), found.begin(), found.end());
  }
  auto snap = std::make_shared<ModelSnapshot>();
  for (const auto& p : paths) {
    auto m = std::make_shared<ServedModel>();
    m->checkpoint = load_model_checkpoint(p);
    m->path = p;
    auto& slot = snap->models[m->checkpoint.model_id];
    // a later phase of the same run supersedes the earlier ones
    if (!slot || to_int(slot->checkpoint.phase) < to_int(m->checkpoint.phase)) slot = m;
    if (snap->default_id.empty()) snap->default_id = m->checkpoint.model_id;
  }
  std::unique_lock<std::shared_mutex> lock(snapshot_mutex_);
  snapshot_ = std::move(snap);
}

std::shared_ptr<const ModelSnapshot> InferenceService::snapshot() const {
  std::shared_lock<std::shared_mutex> lock(snapshot_mutex_);
  return snapshot_;
}

nlohmann::json InferenceService::models_json() const {
  const auto snap = snapshot();
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [id, m] : snap->models)
    list.push_back({{"model_id", id},
                    {"phase", to_int(m->checkpoint.phase)},
                    {"weights_hash", m->checkpoint.weights_hash},
                    {"downsampling_factor", m->checkpoint.generator_config.downsampling_factor()},
                    {"checkpoint", fs::path(m->path).filename().string()},
                    {"default", id == snap->default_id},
                    {"preprocessing", m->checkpoint.preprocessing}});
  return {{"models", list}};
}

std::shared_ptr<const ServedModel> InferenceService::resolve(const std::string& model_id) const {
  const auto snap = snapshot();
  if (snap->models.empty()) throw ServiceError(503, "no models loaded");
  const std::string& id = model_id.empty() ? snap->default_id : model_id;
  const auto it = snap->models.find(id);
  if (it == snap->models.end()) throw ServiceError(409, "unknown model_id '" + model_id + "'");
  return it->second;
}

Tensor<float> InferenceService::decode_edge(const std::string& png) const {
  try {
    // raw strokes are the edge channel; anti-aliasing is thresholded away
    return binarize(decode_image(png), options_.edge_threshold);
  } catch (const std::exception& e) {
    throw ServiceError(422, std::string("edge: ") + e.what());
  }
}

Tensor<float> InferenceService::decode_color(const std::string& png) const {
  try {
    Tensor<float> c = decode_image(png);
    if (options_.median_blur_kernel > 1) c = median_filter(c, options_.median_blur_kernel);
    return c;
  } catch (const std::exception& e) {
    throw ServiceError(422, std::string("color_domain: ") + e.what());
  }
}

Tensor<float> InferenceService::run(const ServedModel& model, const Tensor<float>& edge, const Tensor<float>& color01,
                                    InferMode mode) const {
  if (!edge.same_spatial(color01))
    throw ServiceError(422, "edge is " + edge.shape_string() + " but color_domain is " + color01.shape_string());
  if (mode == InferMode::Refine && model.checkpoint.phase == Phase::Imitation)
    throw ServiceError(409, "model '" + model.checkpoint.model_id + "' has no generating phase");
  const int factor = model.checkpoint.generator_config.downsampling_factor();
  const int h = edge.height(), w = edge.width();
  try {
    const Tensor<float> e = reflect_pad_to_multiple(edge, factor);
    const Tensor<float> c = reflect_pad_to_multiple(normalize(color01), factor);
    const Phase phase = mode == InferMode::Refine ? Phase::Refinement : Phase::Generating;
    const Tensor<float> out = pirec::reconstruct(*model.checkpoint.generator, e, c, phase);
    return denormalize(crop(out, 0, 0, h, w));
  } catch (const std::invalid_argument& ex) {
    throw ServiceError(422, ex.what());
  }
}

std::string InferenceService::reconstruct(const ReconstructRequest& req) const {
  const auto model = resolve(req.model_id);
  const Tensor<float> edge = decode_edge(req.edge_png);
  const Tensor<float> color = decode_color(req.color_png);
  return encode_png(run(*model, edge, color, req.mode));
}

std::vector<Frame> InferenceService::interpolate(const InterpolateRequest& req) const {
  if (req.steps < 2 || req.steps > options_.max_interpolation_steps)
    throw ServiceError(422, "steps must lie in [2, " + std::to_string(options_.max_interpolation_steps) + "]");
  const auto model = resolve(req.model_id);
  const Tensor<float> edge = decode_edge(req.edge_png);
  ColorDomain<float> a, b;
  a.pixels = decode_color(req.color_a_png);
  b.pixels = decode_color(req.color_b_png);
  if (!a.pixels.same_shape(b.pixels))
    throw ServiceError(422, "color_a is " + a.pixels.shape_string() + " but color_b is " + b.pixels.shape_string());
  std::vector<Frame> frames;
  for (int i = 0; i < req.steps; ++i) {
    const double t = static_cast<double>(i) / (req.steps - 1);
    const Tensor<float> blended = interpolate_color_domain(a, b, t).pixels;
    frames.push_back({t, encode_png(run(*model, edge, blended, req.mode))});
  }
  return frames;
}

std::string encode_frames_multipart(const std::vector<Frame>& frames, const std::string& boundary,
                                    const nlohmann::json& extra) {
  nlohmann::json meta = extra;
  meta["t"] = nlohmann::json::array();
  for (const auto& f : frames) meta["t"].push_back(f.t);
  meta["count"] = frames.size();
  std::string body;
  body += "--" + boundary + "\r\nContent-Type: application/json\r\nContent-Disposition: inline; name=\"meta\"\r\n\r\n";
  body += meta.dump() + "\r\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03zu.png", i);
    body += "--" + boundary + "\r\nContent-Type: image/png\r\nContent-Disposition: attachment; name=\"frame\"; filename=\"" +
            std::string(name) + "\"\r\nX-Frame-T: " + nlohmann::json(frames[i].t).dump() + "\r\n\r\n";
    body += frames[i].png + "\r\n";
  }
  body += "--" + boundary + "--\r\n";
  return body;
}

std::vector<Frame> decode_frames_multipart(const std::string& body, const std::string& boundary) {
  const std::string delim = "--" + boundary;
  std::vector<std::pair<std::string, std::string>> parts;  // headers, payload
  std::size_t pos = body.find(delim);
  while (pos != std::string::npos) {
    pos += delim.size();
    if (body.compare(pos, 2, "--") == 0) break;
    pos += 2;  // CRLF
    const std::size_t header_end = body.find("\r\n\r\n", pos);
    if (header_end == std::string::npos) throw std::runtime_error("multipart: truncated headers");
    const std::size_t next = body.find("\r\n" + delim, header_end + 4);
    if (next == std::string::npos) throw std::runtime_error("multipart: missing boundary");
    parts.emplace_back(body.substr(pos, header_end - pos), body.substr(header_end + 4, next - header_end - 4));
    pos = next + 2;
  }
  if (parts.empty() || parts[0].first.find("application/json") == std::string::npos)
    throw std::runtime_error("multipart: missing metadata part");
  const auto meta = nlohmann::json::parse(parts[0].second);
  const auto ts = meta.at("t").get<std::vector<double>>();
  if (ts.size() + 1 != parts.size()) throw std::runtime_error("multipart: frame count does not match metadata");
  std::vector<Frame> frames;
  for (std::size_t i = 1; i < parts.size(); ++i) frames.push_back({ts[i - 1], parts[i].second});
  return frames;
}

namespace {

std::string field(const httplib::Request& req, const std::string& name, bool required = true) {
  if (req.has_file(name)) return req.get_file_value(name).content;
  if (req.has_param(name)) return req.get_param_value(name);
  if (required) throw ServiceError(422, "missing multipart field '" + name + "'");
  return {};
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", message}, {"status", status}}.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.status(), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

}  // namespace

void install_routes(httplib::Server& server, InferenceService& service) {
  // draft-studio runs from another origin
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/healthz", guarded([&service](const httplib::Request&, httplib::Response& res) {
               res.set_content(nlohmann::json{{"status", "ok"}, {"models", service.snapshot()->models.size()}}.dump(),
                               "application/json");
             }));
  server.Get("/v1/models", guarded([&service](const httplib::Request&, httplib::Response& res) {
               res.set_content(service.models_json().dump(), "application/json");
             }));
  server.Post("/v1/models/reload", guarded([&service](const httplib::Request&, httplib::Response& res) {
                service.reload();
                res.set_content(service.models_json().dump(), "application/json");
              }));
  server.Post("/v1/reconstruct", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                ReconstructRequest r;
                r.edge_png = field(req, "edge");
                r.color_png = field(req, "color_domain");
                r.mode = infer_mode_from_string(req.get_param_value("phase"));
                r.model_id = req.get_param_value("model_id");
                const std::string png = service.reconstruct(r);
                res.set_header("X-Phase", infer_mode_name(r.mode));
                res.set_content(png, "image/png");
              }));
  server.Post("/v1/interpolate", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                InterpolateRequest r;
                r.edge_png = field(req, "edge");
                r.color_a_png = field(req, "color_a");
                r.color_b_png = field(req, "color_b");
                const std::string steps = req.has_param("steps") ? req.get_param_value("steps") : field(req, "steps", false);
                if (!steps.empty()) {
                  try {
                    r.steps = std::stoi(steps);
                  } catch (const std::exception&) {
                    throw ServiceError(422, "steps must be an integer");
                  }
                }
                r.mode = infer_mode_from_string(req.get_param_value("phase"));
                r.model_id = req.get_param_value("model_id");
                const auto frames = service.interpolate(r);
                const std::string boundary = "pirec-frames-boundary";
                res.set_content(encode_frames_multipart(frames, boundary, {{"phase", infer_mode_name(r.mode)}}),
                                "multipart/mixed; boundary=" + boundary);
              }));
}

void serve(InferenceService& service, const std::string& host, int port) {
  httplib::Server server;
  install_routes(server, service);
  std::cerr << "listening on " << host << ":" << port << " with " << service.snapshot()->models.size() << " model(s)\n";
  if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace pirec
