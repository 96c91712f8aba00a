// Copyright 2026 The CamLens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// HTTP/JSON front end over the classification pipeline and capture store.
//
//   POST /api/classify[?threshold=t]       body: PNG or P6 bytes
//   POST /api/captures/{id}/tag            {"tag": ..., "note": ...}
//   GET  /api/captures[?tag=...]
//   GET  /api/captures/{id}
//   GET  /api/captures/{id}/image
//   GET  /api/compare?a=...&b=...[&class=...]
//   GET  /api/labels
//   GET  /api/health
//   GET  /                                  static web bundle, if configured

#ifndef CAMLENS_SERVICE_HPP
#define CAMLENS_SERVICE_HPP

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <system_error>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "camlens/capture_store.hpp"
#include "camlens/classify.hpp"
#include "camlens/model.hpp"

namespace camlens {

struct ServiceOptions {
  std::size_t max_body_bytes = 8u << 20;
  /// Directory served at "/"; empty serves a short built-in page.
  std::filesystem::path web_root;
};

class Service {
 public:
  Service(const Model& model, CaptureStore& store, ServiceOptions options = {})
      : model_(model), store_(store), options_(std::move(options)) {}

  /// Registers every route on `server`.
  void mount(httplib::Server& server) {
    server.set_payload_max_length(options_.max_body_bytes);
    server.set_exception_handler(
        [this](const httplib::Request& req, httplib::Response& res, std::exception_ptr ep) {
          internal_error(req, res, ep);
        });

    server.Post("/api/classify", [this](const auto& req, auto& res) { classify(req, res); });
    server.Post("/api/captures/:id/tag", [this](const auto& req, auto& res) { tag(req, res); });
    server.Get("/api/captures", [this](const auto& req, auto& res) { list(req, res); });
    server.Get("/api/captures/:id", [this](const auto& req, auto& res) { get(req, res); });
    server.Get("/api/captures/:id/image", [this](const auto& req, auto& res) { image(req, res); });
    server.Get("/api/compare", [this](const auto& req, auto& res) { compare(req, res); });
    server.Get("/api/labels", [this](const auto&, auto& res) {
      send_json(res, 200, {{"labels", model_.labels()}});
    });
    server.Get("/api/health", [this](const auto&, auto& res) {
      send_json(res, 200,
                {{"status", "ok"},
                 {"model", model_.manifest().name},
                 {"classes", model_.class_count()},
                 {"grid", {{"h", model_.grid_height()}, {"w", model_.grid_width()}}},
                 {"captures", store_.size()}});
    });

    if (!options_.web_root.empty() && std::filesystem::is_directory(options_.web_root)) {
      server.set_mount_point("/", options_.web_root.string());
    } else {
      server.Get("/", [](const auto&, auto& res) {
        res.set_content(
            "<!doctype html><title>camlens</title><p>camlens service is running. "
            "See <a href=\"/api/health\">/api/health</a>.</p>",
            "text/html");
      });
    }
  }

 private:
  static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
  }

  void internal_error(const httplib::Request& req, httplib::Response& res, std::exception_ptr ep) {
    const std::string id = "err-" + std::to_string(++error_counter_);
    std::string what = "unknown exception";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    std::fprintf(stderr, "%s %s %s: %s\n", id.c_str(), req.method.c_str(), req.path.c_str(),
                 what.c_str());
    send_json(res, 500, {{"error", "internal error"}, {"error_id", id}});
  }

  void classify(const httplib::Request& req, httplib::Response& res) {
    const auto bytes = std::span(reinterpret_cast<const std::uint8_t*>(req.body.data()),
                                 req.body.size());
    const ImageFormat format = sniff_image_format(bytes);
    if (format == ImageFormat::kUnknown) {
      return send_error(res, 400, "unsupported media: expected a PNG or binary PPM (P6) body");
    }
    float threshold = kDefaultThreshold;
    if (req.has_param("threshold")) {
      const auto t = parse_float(req.get_param_value("threshold"));
      if (!t || !(*t >= 0.0f && *t <= 1.0f)) {
        return send_error(res, 400, "threshold must be a number within [0, 1]");
      }
      threshold = *t;
    }
    RgbImage image;
    try {
      image = decode_image(bytes);
    } catch (const DecodeError& e) {
      return send_error(res, 400, e.what());
    }
    const Classification result =
        camlens::classify(model_, image, std::min(kDefaultTopK, model_.class_count()), threshold);
    const CaptureRecord record = store_.add(make_capture_record(result), bytes,
                                            format == ImageFormat::kPng ? "png" : "ppm");
    nlohmann::json body = classification_to_json(result);
    body["capture_id"] = record.id;
    send_json(res, 200, body);
  }

  void tag(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error&) {
      return send_error(res, 400, "request body must be JSON");
    }
    if (!body.is_object() || !body.contains("tag") || !body["tag"].is_string()) {
      return send_error(res, 400, "missing string field 'tag'");
    }
    const auto tag = parse_capture_tag(body["tag"].get<std::string>());
    if (!tag) return send_error(res, 400, "unknown tag (expected impressive, funny, puzzling or none)");
    std::string note;
    if (body.contains("note")) {
      if (!body["note"].is_string()) return send_error(res, 400, "'note' must be a string");
      note = body["note"].get<std::string>();
    }
    try {
      send_json(res, 200, record_to_json(store_.tag(req.path_params.at("id"), *tag, note)));
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    }
  }

  void list(const httplib::Request& req, httplib::Response& res) {
    std::optional<CaptureTag> filter;
    if (req.has_param("tag")) {
      filter = parse_capture_tag(req.get_param_value("tag"));
      if (!filter) return send_error(res, 400, "unknown tag filter");
    }
    nlohmann::json out = nlohmann::json::array();
    for (const CaptureRecord& r : store_.list(filter)) out.push_back(record_summary_json(r));
    send_json(res, 200, {{"captures", std::move(out)}});
  }

  void get(const httplib::Request& req, httplib::Response& res) {
    const auto record = store_.get(req.path_params.at("id"));
    if (!record) return send_error(res, 404, "unknown capture id");
    send_json(res, 200, record_to_json(*record));
  }

  void image(const httplib::Request& req, httplib::Response& res) {
    const auto record = store_.get(req.path_params.at("id"));
    if (!record) return send_error(res, 404, "unknown capture id");
    const auto bytes = read_file_bytes(store_.image_path(*record));
    const bool png = record->image_ref.ends_with(".png");
    res.set_content(std::string(bytes.begin(), bytes.end()),
                    png ? "image/png" : "image/x-portable-pixmap");
  }

  void compare(const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("a") || !req.has_param("b")) {
      return send_error(res, 400, "query parameters 'a' and 'b' are required");
    }
    const auto a = store_.get(req.get_param_value("a"));
    const auto b = store_.get(req.get_param_value("b"));
    if (!a || !b) return send_error(res, 404, "unknown capture id");
    std::size_t class_index = a->predictions.front().index;
    if (req.has_param("class")) {
      const std::string s = req.get_param_value("class");
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), class_index);
      if (ec != std::errc() || ptr != s.data() + s.size() || class_index >= model_.class_count()) {
        return send_error(res, 400, "class must be an index in [0, " +
                                        std::to_string(model_.class_count()) + ")");
      }
    }
    const ComparisonReport report = compare_captures(
        *a, *b, class_index, model_.labels(),
        [this](const CaptureRecord& r, std::size_t c) { return cam_for(r, c); });
    send_json(res, 200, comparison_to_json(report));
  }

  /// Stored grid when available; otherwise the capture's image is re-run
  /// through the (deterministic) model.
  std::vector<float> cam_for(const CaptureRecord& r, std::size_t class_index) const {
    if (auto grid = stored_cam(r, class_index)) return *grid;
    const RgbImage img = decode_image(read_file_bytes(store_.image_path(r)));
    const InputShape& in = model_.manifest().input;
    const ForwardResult fwd = model_.forward(preprocess(img, in.height, in.width));
    return normalize_cam(compute_cam(fwd.last_conv_activations, model_.classifier_weights(),
                                     class_index))
        .normalized;
  }

  static std::optional<float> parse_float(const std::string& s) {
    float v = 0.0f;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
  }

  const Model& model_;
  CaptureStore& store_;
  ServiceOptions options_;
  std::atomic<unsigned long> error_counter_{0};
};

}  // namespace camlens

#endif  // CAMLENS_SERVICE_HPP
