// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "salrl/cot.hpp"
#include "salrl/raster.hpp"

namespace salrl {

// One segmentation job handed to an external process. The process reads
// requests.jsonl from the exchange directory and answers each id with
// masks/{id}.pgm.
struct SegmenterRequest {
  std::string id;     // unique and filesystem-safe within a batch
  std::string image;  // opaque scene reference for the segmenter
  std::string text;   // referring expression
  ExprKind kind = ExprKind::region;
};

// Lowercase/digit/dot/dash/underscore survive; everything else becomes '_'.
std::string sanitize_id(const std::string& id);

// Writes dir/requests.jsonl, one request per line. Ids must be unique.
void write_requests(const std::vector<SegmenterRequest>& requests, const std::string& dir);

// Polls dir/masks/{id}.pgm until every request is answered or timeout_ms
// elapses; masks are validated against the expected canvas and binarized.
// Times out with the full list of unanswered ids.
std::map<std::string, BinaryMask> await_masks(const std::vector<SegmenterRequest>& requests,
                                              const std::string& dir, int timeout_ms,
                                              int expect_width, int expect_height);

}  // namespace salrl
