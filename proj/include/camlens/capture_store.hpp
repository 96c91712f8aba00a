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

// Persistent capture collection.
//
// Layout of the data directory:
//
//   captures.ndjson   append-only log, one JSON object per line:
//                       {"op":"capture","record":{...}}
//                       {"op":"tag","id":...,"tag":...,"note":...}
//   images/<id>.<ext> the uploaded image, written before its log line
//
// State is rebuilt by replaying the log. A torn final line (crash during
// append) is skipped.

#ifndef CAMLENS_CAPTURE_STORE_HPP
#define CAMLENS_CAPTURE_STORE_HPP

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "camlens/classify.hpp"

namespace camlens {

enum class CaptureTag { kNone, kImpressive, kFunny, kPuzzling };

inline std::string_view to_string(CaptureTag tag) {
  switch (tag) {
    case CaptureTag::kImpressive: return "impressive";
    case CaptureTag::kFunny: return "funny";
    case CaptureTag::kPuzzling: return "puzzling";
    case CaptureTag::kNone: break;
  }
  return "none";
}

inline std::optional<CaptureTag> parse_capture_tag(std::string_view s) {
  for (CaptureTag t : {CaptureTag::kNone, CaptureTag::kImpressive, CaptureTag::kFunny,
                       CaptureTag::kPuzzling}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

/// One persisted classification event.
struct CaptureRecord {
  std::string id;
  std::string created_at;
  std::string image_ref;
  std::size_t grid_height = 0;
  std::size_t grid_width = 0;
  std::vector<Prediction> predictions;
  /// Normalized CAM grids aligned with `predictions`.
  std::vector<std::vector<float>> cam_grids;
  /// Full probability vector, kept so any class can be compared later.
  std::vector<float> probabilities;
  CaptureTag tag = CaptureTag::kNone;
  std::string note;
};

inline nlohmann::json record_to_json(const CaptureRecord& r) {
  nlohmann::json predictions = nlohmann::json::array();
  for (const Prediction& p : r.predictions) predictions.push_back(prediction_to_json(p));
  nlohmann::json cams = nlohmann::json::array();
  for (const auto& g : r.cam_grids) cams.push_back(grid_to_json(g, r.grid_height, r.grid_width));
  nlohmann::json probabilities = nlohmann::json::array();
  for (float p : r.probabilities) probabilities.push_back(json_float(p));
  return {
      {"id", r.id},
      {"created_at", r.created_at},
      {"image_ref", r.image_ref},
      {"grid", {{"h", r.grid_height}, {"w", r.grid_width}}},
      {"predictions", std::move(predictions)},
      {"cams", std::move(cams)},
      {"probabilities", std::move(probabilities)},
      {"tag", to_string(r.tag)},
      {"note", r.note},
  };
}

/// Listing view without the bulky grids and probability vector.
inline nlohmann::json record_summary_json(const CaptureRecord& r) {
  nlohmann::json predictions = nlohmann::json::array();
  for (const Prediction& p : r.predictions) predictions.push_back(prediction_to_json(p));
  return {{"id", r.id},         {"created_at", r.created_at}, {"image_ref", r.image_ref},
          {"tag", to_string(r.tag)}, {"note", r.note},       {"predictions", std::move(predictions)}};
}

inline CaptureRecord record_from_json(const nlohmann::json& j) {
  CaptureRecord r;
  r.id = j.at("id").get<std::string>();
  r.created_at = j.at("created_at").get<std::string>();
  r.image_ref = j.at("image_ref").get<std::string>();
  r.grid_height = j.at("grid").at("h").get<std::size_t>();
  r.grid_width = j.at("grid").at("w").get<std::size_t>();
  for (const auto& p : j.at("predictions")) {
    r.predictions.push_back({p.at("index").get<std::size_t>(), p.at("label").get<std::string>(),
                             p.at("probability").get<float>()});
  }
  for (const auto& grid : j.at("cams")) {
    std::vector<float> flat;
    for (const auto& row : grid) {
      for (const auto& v : row) flat.push_back(v.get<float>());
    }
    if (flat.size() != r.grid_height * r.grid_width) throw Error("capture grid size mismatch");
    r.cam_grids.push_back(std::move(flat));
  }
  for (const auto& p : j.at("probabilities")) r.probabilities.push_back(p.get<float>());
  const auto tag = parse_capture_tag(j.at("tag").get<std::string>());
  if (!tag) throw Error("unknown tag in capture record");
  r.tag = *tag;
  r.note = j.at("note").get<std::string>();
  if (r.cam_grids.size() != r.predictions.size()) throw Error("capture grids not aligned");
  return r;
}

inline CaptureRecord make_capture_record(const Classification& c) {
  CaptureRecord r;
  r.grid_height = c.grid_height;
  r.grid_width = c.grid_width;
  r.predictions = c.predictions;
  for (const auto& cam : c.cams) r.cam_grids.push_back(cam.normalized);
  r.probabilities = c.probabilities.values();
  return r;
}

/// UTC timestamp with millisecond precision, e.g. 2026-10-18T09:30:00.123Z.
inline std::string utc_timestamp_now() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms));
  return buf;
}

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Single-writer capture store. Mutations are serialized; readers get copies
/// under a shared lock.
class CaptureStore {
 public:
  using Clock = std::function<std::string()>;

  explicit CaptureStore(std::filesystem::path dir, Clock clock = utc_timestamp_now)
      : dir_(std::move(dir)), clock_(std::move(clock)) {
    std::filesystem::create_directories(dir_ / "images");
    replay();
  }

  const std::filesystem::path& directory() const { return dir_; }
  std::size_t skipped_log_lines() const { return skipped_lines_; }

  /// Persists the image and the record; fills in id, created_at and image_ref.
  CaptureRecord add(CaptureRecord record, std::span<const std::uint8_t> image_bytes,
                    std::string_view extension) {
    std::unique_lock lock(mutex_);
    char id[32];
    std::snprintf(id, sizeof(id), "cap-%06llu", static_cast<unsigned long long>(next_id_));
    record.id = id;
    record.created_at = clock_();
    record.image_ref = record.id + "." + std::string(extension);
    record.tag = CaptureTag::kNone;
    record.note.clear();
    write_file_atomic(dir_ / "images" / record.image_ref, image_bytes);
    append({{"op", "capture"}, {"record", record_to_json(record)}});
    ++next_id_;
    records_[record.id] = record;
    return record;
  }

  CaptureRecord tag(const std::string& id, CaptureTag tag, const std::string& note) {
    std::unique_lock lock(mutex_);
    auto it = records_.find(id);
    if (it == records_.end()) throw NotFoundError("unknown capture id '" + id + "'");
    append({{"op", "tag"}, {"id", id}, {"tag", to_string(tag)}, {"note", note}});
    it->second.tag = tag;
    it->second.note = note;
    return it->second;
  }

  std::optional<CaptureRecord> get(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
  }

  /// Newest first; ties on created_at go to the larger id.
  std::vector<CaptureRecord> list(std::optional<CaptureTag> filter = std::nullopt) const {
    std::shared_lock lock(mutex_);
    std::vector<CaptureRecord> out;
    for (const auto& [id, r] : records_) {
      if (!filter || r.tag == *filter) out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const CaptureRecord& a, const CaptureRecord& b) {
      if (a.created_at != b.created_at) return a.created_at > b.created_at;
      return a.id > b.id;
    });
    return out;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
  }

  std::filesystem::path image_path(const CaptureRecord& r) const {
    return dir_ / "images" / r.image_ref;
  }

 private:
  std::filesystem::path log_path() const { return dir_ / "captures.ndjson"; }

  void replay() {
    bool torn_tail = false;
    {
      std::ifstream in(log_path(), std::ios::binary);
      std::string line;
      while (std::getline(in, line)) {
        torn_tail = in.eof();
        if (line.empty()) continue;
        try {
          apply(nlohmann::json::parse(line));
        } catch (const std::exception& e) {
          ++skipped_lines_;
          std::fprintf(stderr, "capture log: skipping unreadable line: %s\n", e.what());
        }
      }
    }
    // Terminate a partially written last line so the next append starts clean.
    if (torn_tail) append_raw("\n");
  }

  void apply(const nlohmann::json& entry) {
    const std::string op = entry.at("op").get<std::string>();
    if (op == "capture") {
      CaptureRecord r = record_from_json(entry.at("record"));
      unsigned long long n = 0;
      if (std::sscanf(r.id.c_str(), "cap-%llu", &n) == 1) next_id_ = std::max(next_id_, n + 1);
      records_[r.id] = std::move(r);
    } else if (op == "tag") {
      auto it = records_.find(entry.at("id").get<std::string>());
      const auto tag = parse_capture_tag(entry.at("tag").get<std::string>());
      if (it == records_.end() || !tag) throw Error("tag entry for unknown capture");
      it->second.tag = *tag;
      it->second.note = entry.at("note").get<std::string>();
    } else {
      throw Error("unknown log op '" + op + "'");
    }
  }

  void append(const nlohmann::json& entry) { append_raw(entry.dump() + "\n"); }

  void append_raw(const std::string& line) {
    const int fd = ::open(log_path().c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw Error("cannot open capture log " + log_path().string());
    const ssize_t written = ::write(fd, line.data(), line.size());
    const bool ok = written == static_cast<ssize_t>(line.size()) && ::fsync(fd) == 0;
    ::close(fd);
    if (!ok) throw Error("failed to append to capture log");
  }

  static void write_file_atomic(const std::filesystem::path& path,
                                std::span<const std::uint8_t> bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
      if (!out) throw Error("failed to write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

  std::filesystem::path dir_;
  Clock clock_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, CaptureRecord> records_;
  unsigned long long next_id_ = 1;
  std::size_t skipped_lines_ = 0;
};

/// Per-class change between two captures.
struct ClassDelta {
  std::size_t index = 0;
  std::string label;
  float confidence_a = 0.0f;
  float confidence_b = 0.0f;
  float delta = 0.0f;
};

/// Top-3 position of a class in each capture (0 = absent).
struct RankChange {
  std::size_t index = 0;
  std::string label;
  std::size_t rank_a = 0;
  std::size_t rank_b = 0;
};

struct ComparisonReport {
  std::string id_a;
  std::string id_b;
  ClassDelta focus;
  /// Classes in the union of both top lists, by class index.
  std::vector<ClassDelta> class_deltas;
  std::size_t grid_height = 0;
  std::size_t grid_width = 0;
  /// normalized_B - normalized_A for the focus class.
  std::vector<float> cam_delta;
  std::vector<RankChange> rank_changes;
};

/// Normalized CAM of `class_index` for a capture.
using CamLookup = std::function<std::vector<float>(const CaptureRecord&, std::size_t class_index)>;

/// Stored grid if the class is among the record's predictions, else nullopt.
inline std::optional<std::vector<float>> stored_cam(const CaptureRecord& r, std::size_t class_index) {
  for (std::size_t i = 0; i < r.predictions.size(); ++i) {
    if (r.predictions[i].index == class_index) return r.cam_grids[i];
  }
  return std::nullopt;
}

inline ComparisonReport compare_captures(const CaptureRecord& a, const CaptureRecord& b,
                                         std::size_t class_index,
                                         std::span<const std::string> labels,
                                         const CamLookup& cam_lookup) {
  if (class_index >= labels.size() || class_index >= a.probabilities.size() ||
      class_index >= b.probabilities.size()) {
    throw ArgumentError("class index " + std::to_string(class_index) + " out of range");
  }
  if (a.grid_height != b.grid_height || a.grid_width != b.grid_width) {
    throw ShapeError("captures have different CAM grids");
  }
  auto delta_for = [&](std::size_t c) {
    return ClassDelta{c, labels[c], a.probabilities[c], b.probabilities[c],
                      b.probabilities[c] - a.probabilities[c]};
  };
  auto rank_in = [](const CaptureRecord& r, std::size_t c) -> std::size_t {
    for (std::size_t i = 0; i < r.predictions.size(); ++i) {
      if (r.predictions[i].index == c) return i + 1;
    }
    return 0;
  };

  ComparisonReport report;
  report.id_a = a.id;
  report.id_b = b.id;
  report.focus = delta_for(class_index);
  report.grid_height = a.grid_height;
  report.grid_width = a.grid_width;

  std::vector<std::size_t> classes;
  for (const auto* r : {&a, &b}) {
    for (const Prediction& p : r->predictions) classes.push_back(p.index);
  }
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  for (std::size_t c : classes) {
    report.class_deltas.push_back(delta_for(c));
    const std::size_t ra = rank_in(a, c), rb = rank_in(b, c);
    if (ra != rb) report.rank_changes.push_back({c, labels[c], ra, rb});
  }

  const std::vector<float> cam_a = cam_lookup(a, class_index);
  const std::vector<float> cam_b = cam_lookup(b, class_index);
  const std::size_t cells = a.grid_height * a.grid_width;
  if (cam_a.size() != cells || cam_b.size() != cells) {
    throw ShapeError("CAM grid does not match the capture grid dimensions");
  }
  report.cam_delta.resize(cells);
  for (std::size_t i = 0; i < cam_a.size(); ++i) report.cam_delta[i] = cam_b[i] - cam_a[i];
  return report;
}

inline nlohmann::json class_delta_to_json(const ClassDelta& d) {
  return {{"index", d.index},
          {"label", d.label},
          {"confidence_a", json_float(d.confidence_a)},
          {"confidence_b", json_float(d.confidence_b)},
          {"delta", json_float(d.delta)}};
}

inline nlohmann::json comparison_to_json(const ComparisonReport& r) {
  nlohmann::json deltas = nlohmann::json::array();
  for (const ClassDelta& d : r.class_deltas) deltas.push_back(class_delta_to_json(d));
  nlohmann::json ranks = nlohmann::json::array();
  for (const RankChange& c : r.rank_changes) {
    ranks.push_back({{"index", c.index},
                     {"label", c.label},
                     {"rank_a", c.rank_a == 0 ? nlohmann::json() : nlohmann::json(c.rank_a)},
                     {"rank_b", c.rank_b == 0 ? nlohmann::json() : nlohmann::json(c.rank_b)}});
  }
  return {
      {"a", r.id_a},
      {"b", r.id_b},
      {"class", class_delta_to_json(r.focus)},
      {"class_deltas", std::move(deltas)},
      {"grid", {{"h", r.grid_height}, {"w", r.grid_width}}},
      {"cam_delta", grid_to_json(r.cam_delta, r.grid_height, r.grid_width)},
      {"rank_changes", std::move(ranks)},
  };
}

}  // namespace camlens

#endif  // CAMLENS_CAPTURE_STORE_HPP
