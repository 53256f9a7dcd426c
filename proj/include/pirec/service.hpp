#pragma once

#include "pirec/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace pirec {

/// Request failure with the HTTP status it maps to.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

enum class InferMode { Generate, Refine };

InferMode infer_mode_from_string(const std::string& s);
const char* infer_mode_name(InferMode m);

struct ServedModel {
  ModelCheckpoint checkpoint;
  std::string path;
};

/// Immutable set of frozen models keyed by model id.
struct ModelSnapshot {
  std::map<std::string, std::shared_ptr<const ServedModel>> models;
  std::string default_id;
};

struct ServiceOptions {
  /// Directory scanned for *.ckpt files; per model id the highest phase wins.
  std::string model_dir;
  /// Extra checkpoint files loaded in addition to the directory.
  std::vector<std::string> checkpoints;
  /// Median filter applied to user color fills before inference (0 = off).
  int median_blur_kernel = 0;
  double edge_threshold = 0.5;
  int max_interpolation_steps = 64;

  /// Reads PIREC_MODEL_DIR when `model_dir` is empty.
  static ServiceOptions from_environment();
};

struct ReconstructRequest {
  std::string edge_png;
  std::string color_png;
  InferMode mode = InferMode::Generate;
  std::string model_id;  // empty: the default model
};

struct InterpolateRequest {
  std::string edge_png;
  std::string color_a_png;
  std::string color_b_png;
  int steps = 5;
  InferMode mode = InferMode::Generate;
  std::string model_id;
};

struct Frame {
  double t = 0.0;
  std::string png;
};

/// Transport-independent inference core. Weights are never written after load;
/// each request works on a snapshot taken under a shared lock.
class InferenceService {
 public:
  explicit InferenceService(ServiceOptions options);

  /// Rebuilds the model set from disk; one reload at a time.
  void reload();
  std::shared_ptr<const ModelSnapshot> snapshot() const;
  const ServiceOptions& options() const { return options_; }

  nlohmann::json models_json() const;
  std::string reconstruct(const ReconstructRequest& req) const;
  std::vector<Frame> interpolate(const InterpolateRequest& req) const;

  /// Lower-level entry point on decoded tensors: edge 1 x H x W in {0, 1},
  /// color 3 x H x W in [0, 1]. Returns a [0, 1] RGB image of the same size.
  Tensor<float> run(const ServedModel& model, const Tensor<float>& edge, const Tensor<float>& color01,
                    InferMode mode) const;

 private:
  std::shared_ptr<const ServedModel> resolve(const std::string& model_id) const;
  Tensor<float> decode_edge(const std::string& png) const;
  Tensor<float> decode_color(const std::string& png) const;

  ServiceOptions options_;
  mutable std::shared_mutex snapshot_mutex_;
  std::mutex reload_mutex_;
  std::shared_ptr<const ModelSnapshot> snapshot_;
};

/// Registers the /v1 routes and /healthz on `server`.
void install_routes(httplib::Server& server, InferenceService& service);

/// Blocks serving on host:port.
void serve(InferenceService& service, const std::string& host, int port);

/// multipart/mixed body with a JSON part ({"t": [...], ...}) followed by one PNG per frame.
std::string encode_frames_multipart(const std::vector<Frame>& frames, const std::string& boundary,
                                    const nlohmann::json& extra = nlohmann::json::object());
/// Parses what encode_frames_multipart produced.
std::vector<Frame> decode_frames_multipart(const std::string& body, const std::string& boundary);

}  // namespace pirec
