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

// Acceptance suite. Prints one [PASS]/[FAIL]/[SKIP] line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "camlens/camlens.hpp"
#include "cli_runner.hpp"
#include "oracles.hpp"

namespace {

using namespace camlens;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Tolerances and budgets.
constexpr double kKernelAtol = 1e-5;
constexpr double kPointwiseAtol = 1e-6;
constexpr int kKernelInstances = 50;
constexpr double kKernelBudgetSeconds = 10.0;
constexpr double kCamMeanAtol = 1e-4;
constexpr int kCamMeanInputs = 20;
constexpr double kCamMeanBudgetSeconds = 5.0;
constexpr int kPropertyGrids = 100;
constexpr double kLinearityAtol = 1e-5;
constexpr double kReferenceBudgetSeconds = 30.0;

const std::string kCli = CAMLENS_CLI_PATH;
const fs::path kSource = CAMLENS_SOURCE_DIR;
const fs::path kFixture = kSource / "data" / "fixture";

struct Outcome {
  enum Status { kPass, kFail, kSkip } status = kFail;
  std::string detail;
};

Outcome pass(std::string detail) { return {Outcome::kPass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Outcome::kFail, std::move(detail)}; }
Outcome skip(std::string detail) { return {Outcome::kSkip, std::move(detail)}; }

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

class Instances {
 public:
  explicit Instances(std::uint32_t seed) : rng_(seed) {}

  std::size_t pick(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  Tensor tensor(Shape shape, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    Tensor t(std::move(shape));
    for (float& v : t.data()) v = dist(rng_);
    return t;
  }

 private:
  std::mt19937 rng_;
};

double max_error(const Tensor& got, const oracle::Vec& want) {
  if (got.size() != want.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  return worst;
}

oracle::Volume volume(const Tensor& t) {
  return oracle::make_volume(int(t.height()), int(t.width()), int(t.channels()), t.values());
}

Outcome kernel_oracle_equivalence() {
  Instances gen(20260101);
  const auto start = Clock::now();
  std::vector<std::string> failures;
  auto check = [&](const char* name, double err, double atol) {
    if (!(err <= atol)) failures.push_back(std::string(name) + fmt(" err %.3g", err));
  };

  for (int i = 0; i < kKernelInstances; ++i) {
    const std::size_t h = gen.pick(1, 9), w = gen.pick(1, 9), c = gen.pick(1, 5);
    const std::size_t k = gen.pick(1, std::min<std::size_t>(3, std::min(h, w)));
    const std::size_t s = gen.pick(1, 2), oc = gen.pick(1, 5);
    const bool same = gen.pick(0, 1) == 1;
    const Tensor x = gen.tensor({h, w, c});

    const ConvParams conv{gen.tensor({k, k, c, oc}), gen.tensor({oc}), s,
                          same ? Padding::kSame : Padding::kValid};
    check("conv2d",
          max_error(conv2d(x, conv),
                    oracle::conv2d(volume(x), conv.kernel.values(), int(k), int(k), int(oc),
                                   conv.bias.values(), int(s), same).v),
          kKernelAtol);

    const ConvParams dw{gen.tensor({k, k, c, 1}), gen.tensor({c}), s,
                        same ? Padding::kSame : Padding::kValid};
    check("depthwise_conv2d",
          max_error(depthwise_conv2d(x, dw),
                    oracle::depthwise(volume(x), dw.kernel.values(), int(k), int(k),
                                      dw.bias.values(), int(s), same).v),
          kKernelAtol);

    const BatchNormParams bn{gen.tensor({c}, 0.5f, 1.5f), gen.tensor({c}), gen.tensor({c}),
                             gen.tensor({c}, 0.1f, 2.0f), 1e-3f};
    oracle::Vec bn_want(x.size());
    for (std::size_t p = 0; p < x.size(); ++p) {
      const std::size_t ch = p % c;
      bn_want[p] = oracle::batch_norm_scalar(x[p], bn.gamma[ch], bn.beta[ch], bn.mean[ch],
                                             bn.variance[ch], bn.epsilon);
    }
    check("batch_norm", max_error(batch_norm(x, bn), bn_want), kPointwiseAtol);

    check("global_average_pool",
          max_error(global_average_pool(x), oracle::global_average_pool(volume(x))),
          kKernelAtol);

    const std::size_t m = gen.pick(1, 12);
    const Tensor vec_in = gen.tensor({h * c});
    const Tensor weights = gen.tensor({h * c, m}), bias = gen.tensor({m});
    check("dense",
          max_error(dense(vec_in, weights, bias),
                    oracle::matvec(oracle::Vec(vec_in.values().begin(), vec_in.values().end()),
                                   weights.values(), bias.values())),
          kKernelAtol);

    const Tensor logits = gen.tensor({m}, -8.0f, 8.0f);
    check("softmax",
          max_error(softmax(logits),
                    oracle::softmax(oracle::Vec(logits.values().begin(), logits.values().end()))),
          kPointwiseAtol);

    const std::size_t rh = gen.pick(1, 12), rw = gen.pick(1, 12);
    const Tensor img = gen.tensor({h, w, c}, 0.0f, 255.0f);
    const Tensor resized = resize_bilinear(img, rh, rw);
    Tensor scaled = resized;
    for (float& v : scaled.data()) v /= 255.0f;
    oracle::Vec want = oracle::resize(volume(img), int(rh), int(rw)).v;
    for (double& v : want) v /= 255.0;
    check("resize_bilinear", max_error(scaled, want), kKernelAtol);
  }

  const double elapsed = seconds_since(start);
  const std::string summary =
      fmt("%.0f instances x 7 kernels, %.3f s", kKernelInstances, elapsed);
  if (!failures.empty()) return fail(failures.front() + "; " + summary);
  if (elapsed >= kKernelBudgetSeconds) return fail("too slow: " + summary);
  return pass(summary);
}

Outcome cam_mean_identity() {
  const Model model = load_model_files(kFixture / "fixture.manifest.json", kFixture / "fixture.camw");
  Instances gen(7);
  const auto start = Clock::now();
  double worst = 0.0;
  for (int i = 0; i < kCamMeanInputs; ++i) {
    const ForwardResult r = model.forward(gen.tensor({8, 8, 3}));
    for (std::size_t c = 0; c < model.class_count(); ++c) {
      const ClassActivationMap cam =
          compute_cam(r.last_conv_activations, model.classifier_weights(), c);
      double mean = 0.0;
      for (float v : cam.raw) mean += v;
      mean /= static_cast<double>(cam.raw.size());
      worst = std::max(worst, std::abs(mean - (double(r.logits[c]) - model.classifier_bias()[c])));
    }
  }
  const double elapsed = seconds_since(start);
  const std::string summary = fmt("max |mean(M_c) - (logit_c - bias_c)| = %.3g over %.0f inputs, %.3f s",
                                  worst, kCamMeanInputs, elapsed);
  if (!(worst <= kCamMeanAtol) || elapsed >= kCamMeanBudgetSeconds) return fail(summary);
  return pass(summary);
}

Outcome cam_linearity_and_monotonicity() {
  Instances gen(99);
  int linearity_violations = 0, monotonicity_violations = 0;
  for (int g = 0; g < kPropertyGrids; ++g) {
    const std::size_t h = gen.pick(1, 7), w = gen.pick(1, 7), k = gen.pick(1, 8);
    const std::size_t classes = gen.pick(1, 5), c = gen.pick(0, classes - 1);
    const Tensor a = gen.tensor({h, w, k}, 0.0f, 6.0f), b = gen.tensor({h, w, k}, 0.0f, 6.0f);
    const Tensor weights = gen.tensor({k, classes});
    const float alpha = gen.tensor({1}, -2.0f, 2.0f)[0];
    Tensor combo({h, w, k});
    for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a[i] + alpha * b[i];
    const auto ma = compute_cam(a, weights, c).raw, mb = compute_cam(b, weights, c).raw;
    const auto mc = compute_cam(combo, weights, c).raw;
    for (std::size_t i = 0; i < ma.size(); ++i) {
      const double want = double(ma[i]) + double(alpha) * mb[i];
      if (std::abs(mc[i] - want) > kLinearityAtol * (1.0 + std::abs(want))) {
        ++linearity_violations;
      }
    }
  }
  for (int g = 0; g < kPropertyGrids; ++g) {
    const std::size_t h = gen.pick(1, 7), w = gen.pick(1, 7);
    ClassActivationMap cam;
    cam.height = h;
    cam.width = w;
    cam.raw = gen.tensor({h * w}, -5.0f, 5.0f).values();
    cam = normalize_cam(std::move(cam));
    for (int step = 0; step < 20; ++step) {
      const float t1 = gen.tensor({1}, 0.0f, 1.0f)[0], t2 = gen.tensor({1}, 0.0f, 1.0f)[0];
      const CamMask lo = threshold_mask(cam, std::min(t1, t2));
      const CamMask hi = threshold_mask(cam, std::max(t1, t2));
      for (std::size_t i = 0; i < lo.cells.size(); ++i) {
        if (hi.cells[i] && !lo.cells[i]) ++monotonicity_violations;
      }
    }
  }
  const std::string summary =
      fmt("%.0f grids each: %.0f linearity, %.0f monotonicity violations", kPropertyGrids,
          linearity_violations, monotonicity_violations);
  return linearity_violations == 0 && monotonicity_violations == 0 ? pass(summary) : fail(summary);
}

Outcome architecture_gate() {
  const std::pair<const char*, const char*> cases[] = {
      {"dense_before_pool", "dense layer before global average pool"},
      {"missing_softmax", "model must end with softmax"},
      {"missing_pool", "missing global average pool before classifier"},
  };
  int named = 0;
  std::string detail;
  for (const auto& [file, violation] : cases) {
    const fs::path manifest = kSource / "data" / "negative" / (std::string(file) + ".manifest.json");
    const auto r = clitest::run(kCli, {"inspect", "--model-manifest", manifest.string(),
                                       "--model-weights", (kFixture / "fixture.camw").string()});
    bool library_named = false;
    try {
      load_model_files(manifest, kFixture / "fixture.camw");
    } catch (const ModelError& e) {
      library_named = e.kind() == ModelErrorKind::kCamIncompatible &&
                      std::string(e.what()).find(violation) != std::string::npos;
    }
    const bool cli_named = r.exit_code == 1 && r.err.find(violation) != std::string::npos;
    if (library_named && cli_named) {
      ++named;
    } else {
      detail += std::string(" ") + file + " not rejected as '" + violation + "';";
    }
  }
  if (named != 3) return fail(fmt("%.0f/3 rejected with the violation named;", named) + detail);
  return pass("3/3 negative manifests rejected with the violation named (library and CLI)");
}

struct Server {
  std::unique_ptr<clitest::Background> process;
  int port = -1;
};

Server start_server(const fs::path& data_dir) {
  Server s;
  s.process = std::make_unique<clitest::Background>(
      kCli, std::vector<std::string>{"serve", "--model-manifest",
                                     (kFixture / "fixture.manifest.json").string(),
                                     "--model-weights", (kFixture / "fixture.camw").string(),
                                     "--host", "127.0.0.1", "--port", "0", "--data-dir",
                                     data_dir.string()});
  if (const auto banner = s.process->wait_for("listening on")) {
    s.port = clitest::port_from_banner(*banner);
  }
  return s;
}

std::string read_fixture_png() {
  const auto bytes = read_file_bytes(kFixture / "fixture.png");
  return {bytes.begin(), bytes.end()};
}

Outcome end_to_end_determinism(const fs::path& scratch) {
  const std::vector<std::string> args = {
      "classify", "--model-manifest", (kFixture / "fixture.manifest.json").string(),
      "--model-weights", (kFixture / "fixture.camw").string(), "--image",
      (kFixture / "fixture.png").string()};
  const auto first = clitest::run(kCli, args), second = clitest::run(kCli, args);
  if (first.exit_code != 0 || second.exit_code != 0) return fail("CLI classify failed: " + first.err);
  if (first.out != second.out) return fail("CLI output differs between runs");
  const json cli = json::parse(first.out);
  if (cli["predictions"][0]["index"] != 0) {
    return fail("top-1 is " + cli["predictions"][0].dump() + ", expected class 0");
  }

  Server server = start_server(scratch / "determinism");
  if (server.port < 0) return fail("service did not start: " + server.process->log());
  httplib::Client client("127.0.0.1", server.port);
  auto res = client.Post("/api/classify", read_fixture_png(), "image/png");
  if (!res || res->status != 200) return fail("service classify failed");
  json served = json::parse(res->body);
  served.erase("capture_id");
  server.process->stop();
  if (served.dump() != cli.dump()) return fail("service payload differs from CLI payload");
  return pass("top-1 class 0 (" + cli["predictions"][0]["label"].get<std::string>() +
              "), CLI runs byte-identical, service payload identical");
}

Outcome persistence(const fs::path& scratch) {
  const fs::path data = scratch / "persistence";
  std::vector<std::string> ids_before;
  json funny_before;
  {
    Server server = start_server(data);
    if (server.port < 0) return fail("service did not start: " + server.process->log());
    httplib::Client client("127.0.0.1", server.port);
    std::vector<std::string> ids;
    for (int i = 0; i < 3; ++i) {
      auto res = client.Post("/api/classify", read_fixture_png(), "image/png");
      if (!res || res->status != 200) return fail("classify failed");
      ids.push_back(json::parse(res->body)["capture_id"]);
    }
    auto tagged = client.Post("/api/captures/" + ids[1] + "/tag",
                              json{{"tag", "funny"}, {"note", "chair → plunger"}}.dump(),
                              "application/json");
    if (!tagged || tagged->status != 200) return fail("tag failed");
    const json listed = json::parse(client.Get("/api/captures")->body);
    for (const json& c : listed["captures"]) ids_before.push_back(c["id"]);
    funny_before = json::parse(client.Get("/api/captures/" + ids[1])->body);
    if (server.process->stop() != 0) return fail("service did not shut down cleanly");
  }
  Server server = start_server(data);
  if (server.port < 0) return fail("service did not restart: " + server.process->log());
  httplib::Client client("127.0.0.1", server.port);
  std::vector<std::string> ids_after;
  const json listed = json::parse(client.Get("/api/captures")->body);
  for (const json& c : listed["captures"]) ids_after.push_back(c["id"]);
  const json funny_list = json::parse(client.Get("/api/captures?tag=funny")->body)["captures"];
  const json funny_after =
      json::parse(client.Get("/api/captures/" + funny_before["id"].get<std::string>())->body);
  server.process->stop();
  if (ids_before.size() != 3) return fail("expected 3 captures before restart");
  if (ids_after != ids_before) return fail("list ordering changed across restart");
  if (funny_list.size() != 1 || funny_after != funny_before || funny_after["tag"] != "funny" ||
      funny_after["note"] != "chair → plunger") {
    return fail("tagged record did not survive restart");
  }
  return pass(fmt("%.0f records and the funny tag survived restart, ordering stable",
                  double(ids_after.size())));
}

Outcome reference_scale_shapes() {
  const Model model = make_reference_scale_model().load();
  const RgbImage image = make_fixture_image(224, 224);
  const auto start = Clock::now();
  const Classification result = classify(model, image);
  const double elapsed = seconds_since(start);
  bool grids_ok = result.cams.size() == 3;
  for (const auto& cam : result.cams) grids_ok = grids_ok && cam.height == 7 && cam.width == 7;
  const std::string summary =
      fmt("grid %.0fx%.0f, %.0f predictions", double(result.grid_height), double(result.grid_width),
          double(result.predictions.size())) +
      fmt(" of %.0f classes, forward %.3f s", double(model.class_count()), elapsed);
  if (result.grid_height != 7 || result.grid_width != 7 || result.predictions.size() != 3 ||
      model.class_count() != 1000 || !grids_ok || elapsed >= kReferenceBudgetSeconds) {
    return fail(summary);
  }
  return pass(summary);
}

Outcome real_weights_check() {
  const char* manifest = std::getenv("CAMLENS_REAL_MANIFEST");
  const char* weights = std::getenv("CAMLENS_REAL_WEIGHTS");
  const char* image = std::getenv("CAMLENS_REAL_IMAGE");
  if (!manifest || !weights || !image) {
    return skip("set CAMLENS_REAL_MANIFEST, CAMLENS_REAL_WEIGHTS and CAMLENS_REAL_IMAGE to run");
  }
  const Model model = load_model_files(manifest, weights);
  const Classification result = classify(model, decode_image(read_file_bytes(image)));
  std::string top;
  for (const Prediction& p : result.predictions) {
    top += " " + p.label + fmt(" (%.1f%%)", 100.0 * p.probability);
    if (p.label.find("remote") != std::string::npos) return pass("top-3:" + top);
  }
  return fail("no remote-control class in top-3:" + top);
}

}  // namespace

int main() {
  const fs::path scratch =
      fs::temp_directory_path() / ("camlens-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"kernel_oracle_equivalence", kernel_oracle_equivalence},
      {"cam_spatial_mean_identity", cam_mean_identity},
      {"cam_linearity_and_threshold_monotonicity", cam_linearity_and_monotonicity},
      {"architecture_gate", architecture_gate},
      {"end_to_end_determinism", [&] { return end_to_end_determinism(scratch); }},
      {"persistence", [&] { return persistence(scratch); }},
      {"reference_scale_shapes", reference_scale_shapes},
      {"real_weights_remote_control (manual)", real_weights_check},
  };

  int failed = 0;
  for (const auto& [name, criterion] : criteria) {
    Outcome outcome;
    try {
      outcome = criterion();
    } catch (const std::exception& e) {
      outcome = fail(std::string("exception: ") + e.what());
    }
    const char* tag = outcome.status == Outcome::kPass   ? "PASS"
                      : outcome.status == Outcome::kSkip ? "SKIP"
                                                         : "FAIL";
    if (outcome.status == Outcome::kFail) ++failed;
    std::printf("[%s] %s: %s\n", tag, name, outcome.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(scratch);
  std::printf("%s: %d criteria failed\n", failed == 0 ? "OK" : "FAILED", failed);
  return failed == 0 ? 0 : 1;
}
