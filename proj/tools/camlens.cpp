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

// camlens command line: classify, inspect, serve, make-fixture.
//
// JSON goes to stdout, diagnostics to stderr. Exit codes: 0 ok, 1 runtime
// failure (load/decode/inference/bind), 2 bad flags.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "camlens/camlens.hpp"

namespace fs = std::filesystem;

namespace {

struct ModelFlags {
  std::string manifest;
  std::string weights;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--model-manifest", manifest, "model manifest (JSON)")->required();
    cmd->add_option("--model-weights", weights, "model weights (CAMW blob)")->required();
  }

  camlens::Model load() const { return camlens::load_model_files(manifest, weights); }
};

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw camlens::Error("cannot write " + path.string());
}

struct ClassifyFlags {
  ModelFlags model;
  std::string image;
  std::size_t top_k = camlens::kDefaultTopK;
  float threshold = camlens::kDefaultThreshold;
  float alpha = camlens::kDefaultAlpha;
  std::optional<std::size_t> cam_class;
  std::string overlay_out;
};

int run_classify(const ClassifyFlags& f) {
  using namespace camlens;
  const Model model = f.model.load();
  const RgbImage image = decode_image(read_file_bytes(f.image));
  const Classification result = classify(model, image, f.top_k, f.threshold);
  std::cout << classification_to_json(result).dump(2) << "\n";

  if (!f.overlay_out.empty()) {
    const std::size_t cls = f.cam_class.value_or(result.predictions.front().index);
    const ClassActivationMap cam = normalize_cam(
        compute_cam(result.last_conv_activations, model.classifier_weights(), cls));
    const RgbImage overlay = render_overlay(image, threshold_mask(cam, f.threshold), f.alpha);
    const fs::path out(f.overlay_out);
    write_bytes(out, out.extension() == ".ppm" ? encode_ppm(overlay) : encode_png(overlay));
    std::fprintf(stderr, "wrote overlay for class %zu (%s) to %s\n", cls,
                 model.labels()[cls].c_str(), out.c_str());
  }
  return 0;
}

int run_inspect(const ModelFlags& flags, bool table) {
  using namespace camlens;
  const Model model = flags.load();
  if (table) {
    std::printf("model %s\n", model.manifest().name.c_str());
    std::printf("%-4s %-22s %-16s %12s\n", "#", "kind", "output", "params");
    std::size_t total = 0;
    for (std::size_t i = 0; i < model.layers().size(); ++i) {
      const BoundLayer& l = model.layers()[i];
      total += l.parameter_count;
      std::printf("%-4zu %-22s %-16s %12zu\n", i, std::string(to_string(l.spec.kind)).c_str(),
                  shape_to_string(l.output_shape).c_str(), l.parameter_count);
    }
    std::printf("parameters %zu\nK %zu\nC %zu\ngrid %zux%zu\n", total, model.feature_channels(),
                model.class_count(), model.grid_height(), model.grid_width());
    return 0;
  }
  nlohmann::json layers = nlohmann::json::array();
  std::size_t total = 0;
  for (const BoundLayer& l : model.layers()) {
    total += l.parameter_count;
    layers.push_back({{"kind", to_string(l.spec.kind)},
                      {"output_shape", l.output_shape},
                      {"parameters", l.parameter_count}});
  }
  const nlohmann::json out = {
      {"name", model.manifest().name},
      {"input", {model.manifest().input.height, model.manifest().input.width,
                 model.manifest().input.channels}},
      {"layers", std::move(layers)},
      {"parameters", total},
      {"feature_channels", model.feature_channels()},
      {"classes", model.class_count()},
      {"grid", {{"h", model.grid_height()}, {"w", model.grid_width()}}},
  };
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct ServeFlags {
  ModelFlags model;
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string data_dir;
  std::string web_root;
};

int run_serve(ServeFlags f) {
  using namespace camlens;
  if (f.data_dir.empty()) {
    if (const char* env = std::getenv("CAMLENS_DATA_DIR")) f.data_dir = env;
  }
  if (f.data_dir.empty()) {
    std::fprintf(stderr, "error: --data-dir (or CAMLENS_DATA_DIR) is required\n");
    return 2;
  }
  const Model model = f.model.load();
  CaptureStore store(f.data_dir);
  Service service(model, store, {.web_root = f.web_root});

  // Block termination signals so a dedicated thread can stop the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  httplib::Server server;
  // SO_REUSEADDR only; binding an occupied port fails.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  service.mount(server);
  const int port = f.port == 0 ? server.bind_to_any_port(f.host)
                                : (server.bind_to_port(f.host, f.port) ? f.port : -1);
  if (port < 0) {
    std::fprintf(stderr, "error: cannot bind %s:%d (address in use?)\n", f.host.c_str(), f.port);
    return 1;
  }
  std::fprintf(stderr, "camlens: serving %s (%zu classes, %zux%zu grid), %zu captures in %s\n",
               model.manifest().name.c_str(), model.class_count(), model.grid_height(),
               model.grid_width(), store.size(), f.data_dir.c_str());
  std::fprintf(stderr, "camlens: listening on http://%s:%d\n", f.host.c_str(), port);

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  const bool ok = server.listen_after_bind();
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  return ok ? 0 : 1;
}

int run_make_fixture(const std::string& out_dir, bool reference) {
  using namespace camlens;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  if (reference) {
    make_reference_scale_model().save(dir / "reference.manifest.json", dir / "reference.camw");
  } else {
    make_fixture_model().save(dir / "fixture.manifest.json", dir / "fixture.camw");
    const RgbImage img = make_fixture_image();
    write_bytes(dir / "fixture.png", encode_png(img));
    write_bytes(dir / "fixture.ppm", encode_ppm(img));
  }
  std::fprintf(stderr, "wrote %s model files to %s\n", reference ? "reference-scale" : "fixture",
               out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"camlens: CNN classification with class activation maps"};
  app.require_subcommand(1);

  ClassifyFlags classify_flags;
  CLI::App* classify = app.add_subcommand("classify", "classify an image and print top-k + CAMs");
  classify_flags.model.add_to(classify);
  classify->add_option("--image", classify_flags.image, "PNG or PPM image")->required();
  classify->add_option("--top-k", classify_flags.top_k, "number of predictions")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  classify->add_option("--threshold", classify_flags.threshold, "CAM display threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0f, 1.0f));
  classify->add_option("--alpha", classify_flags.alpha, "overlay blend factor")
      ->capture_default_str()
      ->check(CLI::Range(0.0f, 1.0f));
  classify->add_option("--cam-class", classify_flags.cam_class,
                       "class index for the overlay (default: top-1)");
  classify->add_option("--overlay-out", classify_flags.overlay_out,
                       "write the overlay image (.png, or .ppm for binary PPM)");

  ModelFlags inspect_flags;
  bool inspect_table = false;
  CLI::App* inspect = app.add_subcommand("inspect", "print the layer table and CAM geometry");
  inspect_flags.add_to(inspect);
  inspect->add_flag("--table", inspect_table, "human-readable table instead of JSON");

  ServeFlags serve_flags;
  CLI::App* serve = app.add_subcommand("serve", "run the HTTP service");
  serve_flags.model.add_to(serve);
  serve->add_option("--host", serve_flags.host)->capture_default_str();
  serve->add_option("--port", serve_flags.port, "TCP port (0 picks a free one)")
      ->capture_default_str()
      ->check(CLI::Range(0, 65535));
  serve->add_option("--data-dir", serve_flags.data_dir,
                    "capture store directory (default: $CAMLENS_DATA_DIR)");
  serve->add_option("--web-root", serve_flags.web_root, "static web bundle served at /");

  std::string fixture_dir;
  bool fixture_reference = false;
  CLI::App* make_fixture =
      app.add_subcommand("make-fixture", "write the deterministic synthetic model files");
  make_fixture->add_option("--out-dir", fixture_dir)->required();
  make_fixture->add_flag("--reference", fixture_reference,
                         "write the 224x224 / 1000-class reference-scale model instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*classify) {
      if (classify_flags.cam_class && classify_flags.overlay_out.empty()) {
        std::fprintf(stderr, "warning: --cam-class has no effect without --overlay-out\n");
      }
      return run_classify(classify_flags);
    }
    if (*inspect) return run_inspect(inspect_flags, inspect_table);
    if (*serve) return run_serve(serve_flags);
    if (*make_fixture) return run_make_fixture(fixture_dir, fixture_reference);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
