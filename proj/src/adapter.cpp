// SPDX-License-Identifier: Apache-2.0
#include "salrl/adapter.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <thread>

namespace salrl {

namespace fs = std::filesystem;

std::string sanitize_id(const std::string& id) {
  std::string out;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '.' || c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

void write_requests(const std::vector<SegmenterRequest>& requests, const std::string& dir) {
  std::set<std::string> seen;
  for (const auto& r : requests) {
    if (r.id != sanitize_id(r.id))
      throw std::invalid_argument("adapter: request id is not filesystem-safe: " + r.id);
    if (!seen.insert(r.id).second)
      throw std::invalid_argument("adapter: duplicate request id: " + r.id);
  }
  fs::create_directories(fs::path(dir) / "masks");
  std::ofstream out(fs::path(dir) / "requests.jsonl", std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + dir + "/requests.jsonl");
  for (const auto& r : requests) {
    nlohmann::ordered_json rec;
    rec["id"] = r.id;
    rec["image"] = r.image;
    rec["text"] = r.text;
    rec["kind"] = r.kind == ExprKind::region ? "region" : "instance";
    out << rec.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + dir + "/requests.jsonl");
}

std::map<std::string, BinaryMask> await_masks(const std::vector<SegmenterRequest>& requests,
                                              const std::string& dir, int timeout_ms,
                                              int expect_width, int expect_height) {
  if (timeout_ms < 0) throw std::invalid_argument("adapter: negative timeout");
  std::map<std::string, BinaryMask> done;
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    for (const auto& r : requests) {
      if (done.count(r.id)) continue;
      fs::path p = fs::path(dir) / "masks" / (r.id + ".pgm");
      if (!fs::exists(p)) continue;
      GrayMask g = load_mask(p.string());
      if (g.width != expect_width || g.height != expect_height)
        throw RasterError("adapter mask " + r.id + ": expected " + std::to_string(expect_width) +
                          "x" + std::to_string(expect_height) + ", got " +
                          std::to_string(g.width) + "x" + std::to_string(g.height));
      done.emplace(r.id, binarize(g, kBinaryIngestThreshold));
    }
    if (done.size() == requests.size()) return done;
    if (std::chrono::steady_clock::now() >= deadline) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  std::string missing;
  for (const auto& r : requests)
    if (!done.count(r.id)) {
      if (!missing.empty()) missing += ", ";
      missing += r.id;
    }
  throw std::runtime_error("adapter timeout after " + std::to_string(timeout_ms) +
                           " ms; unanswered ids: " + missing);
}

}  // namespace salrl
