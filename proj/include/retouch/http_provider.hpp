// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <retouch/providers.hpp>

#include <cstddef>
#include <memory>
#include <string>

namespace retouch
{

struct HttpOptions
{
    /// "http://host[:port][/base/path]"; endpoints are appended to the path.
    std::string base_url;
    int timeout_ms = 30000;
    /// Extra attempts after the first for transport errors, timeouts, 429 and 5xx.
    int max_retries = 3;
    /// Delay before the first retry; doubles for each further retry.
    int backoff_initial_ms = 100;
    /// Upper bound on simultaneous requests issued by one provider instance.
    std::size_t max_in_flight = 4;

    void validate() const;
};

// JSON over HTTP, images and masks as base64 PNM and saliency as base64 FSAL1:
//   POST /v1/perceive {image_b64, format:"pnm", prompt} -> {saliency_b64, width, height}
//   POST /v1/diagnose {image_b64, prompt, regions:[{id, bbox, mask_b64}]}
//                     -> {diagnoses:[{id, category, description, severity}]}
//   POST /v1/inpaint  {image_b64, mask_b64?, instruction?} -> {image_b64}
// Failures are classified as Transport, Timeout, HttpStatus or SchemaViolation.

[[nodiscard]] std::shared_ptr<PerceptionProvider> make_http_perception(HttpOptions options);
[[nodiscard]] std::shared_ptr<ReasoningProvider> make_http_reasoning(HttpOptions options);
[[nodiscard]] std::shared_ptr<InpaintTool> make_http_tool(HttpOptions options, ToolDescriptor descriptor);

/// Endpoints from RETOUCH_BACKEND_PERCEPTION_URL, RETOUCH_BACKEND_REASONING_URL
/// and, for the tools, RETOUCH_BACKEND_INPAINT_URL (mask-guided) and
/// RETOUCH_BACKEND_EDIT_URL (instruction-driven). Perception and reasoning are
/// required; at least one tool must be configured.
[[nodiscard]] Providers providers_from_env(int timeout_ms);

} // namespace retouch
