#include "crmagent/provider.hpp"

#include <array>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "crmagent/errors.hpp"
#include "crmagent/util.hpp"

namespace crmagent::providers {

using prompts::PromptKind;

void ScriptedProvider::add_fixture(PromptKind kind, std::string_view tag, std::string response) {
  by_target_[std::string(prompt_kind_name(kind)) + "/" + std::string(tag)] = std::move(response);
}

void ScriptedProvider::add_digest_fixture(std::string_view digest, std::string response) {
  by_digest_[std::string(digest)] = std::move(response);
}

ScriptedProvider ScriptedProvider::from_fixture_file(const std::filesystem::path& path) {
  ScriptedProvider provider;
  auto j = nlohmann::json::parse(util::read_text_file(path));
  if (j.contains("by_target"))
    for (const auto& [key, value] : j["by_target"].items())
      provider.by_target_[key] = value.get<std::string>();
  if (j.contains("by_digest"))
    for (const auto& [key, value] : j["by_digest"].items())
      provider.by_digest_[key] = value.get<std::string>();
  return provider;
}

namespace {

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& bank, uint64_t digest,
                      uint64_t salt) {
  return bank[util::fnv1a64_mix(digest, salt) % N];
}

constexpr std::array<std::string_view, 8> kRewriteTitles = {
    "Limited-Time Deal Inside!",
    "Your Exclusive Savings Await!",
    "Last Chance: Top Picks on Sale!",
    "Unlock Today's Best Offer!",
    "Don't Miss Out - Ends Soon!",
    "Fresh Deals Just for You!",
    "Act Fast: Favorites Are Going!",
    "Big Savings, Small Window!",
};

constexpr std::array<std::string_view, 8> kRewriteBodies = {
    "Grab your favorites now and enjoy instant savings before this offer expires. Shop today!",
    "Top-rated picks are on sale for a short time. Check out now and lock in the discount!",
    "Your next order just got cheaper. Tap to claim the deal before it disappears!",
    "Best-sellers are moving fast. Secure yours now and save while stocks last!",
    "A clear, simple deal: real savings on the products you already love. Shop now!",
    "Complete your purchase today and enjoy the discount at checkout. Limited slots left!",
    "Handpicked offers are live now. Don't wait - these prices won't stay long!",
    "Save more on every order this week. Start shopping and watch the total drop!",
};

constexpr std::array<std::string_view, 4> kSuccessPatterns = {
    "High performers lead with a concrete incentive, add time pressure, and close with a direct "
    "call to action.",
    "Winning templates state the benefit in the first line and keep the body to one actionable "
    "sentence.",
    "Strong messages pair a specific discount with urgency and avoid vague promises.",
    "Effective copy names the offer, sets a deadline, and tells the reader exactly what to do "
    "next.",
};

constexpr std::array<std::string_view, 4> kFailureReasons = {
    "The low performer buries the offer, uses generic phrasing, and gives no reason to act now.",
    "Weak copy assumes familiarity, lacks a concrete incentive, and ends without a clear next "
    "step.",
    "The underperforming message is vague about the benefit and carries no urgency.",
    "Low-engagement templates read as filler: no specific deal, no deadline, no call to action.",
};

constexpr std::array<std::string_view, 4> kScoreReasonsA = {
    "The message is serviceable but generic, with little urgency for this segment.",
    "The copy states an offer but the incentive is vague and the call to action is soft.",
    "The tone is acceptable yet the message gives the reader no concrete reason to act now.",
    "The message assumes context the audience may not have and undersells the benefit.",
};

constexpr std::array<std::string_view, 4> kScoreReasonsB = {
    "The message pairs a concrete incentive with urgency, matching what this segment responds to.",
    "Clear benefit, clear deadline, clear action - the copy is persuasive and easy to act on.",
    "The rewrite states the offer plainly and motivates immediate action.",
    "Specific savings plus time pressure make the message compelling for this audience.",
};

constexpr std::array<std::string_view, 4> kPreferenceReasons = {
    "Message B is more persuasive: it names a concrete benefit, adds urgency, and ends with a "
    "direct call to action, all better suited to this segment.",
    "Message B communicates a specific incentive and a clear next step, while Message A stays "
    "generic.",
    "Message B creates immediacy and states the value plainly, which fits this audience better "
    "than Message A's vaguer framing.",
    "Message B is clearer and more action-driven; Message A lacks a concrete reason to act now.",
};

constexpr std::array<std::string_view, 5> kErrorLabels = {
    "Weak Call-to-Action", "Vague Incentive", "Misaligned Tone", "Audience Assumption Error",
    "Irrelevant Offer",
};

constexpr std::array<std::string_view, 5> kErrorFeedback = {
    "The message never gives the reader a concrete, time-bound reason to act.",
    "A promotion is implied but the actual benefit is never specified.",
    "The tone assumes a relationship the audience segment does not have.",
    "The message presumes prior engagement that this segment lacks.",
    "The offer does not match the likely status of this audience.",
};

std::string synthesize(const ProviderRequest& request) {
  uint64_t digest = util::fnv1a64(request.prompt.rendered_text);
  switch (request.prompt.kind) {
    case PromptKind::ContentDiagnosis: {
      std::string out = "Success Patterns: ";
      out += pick(kSuccessPatterns, digest, 1);
      out += "\nFailure Reasons: ";
      out += pick(kFailureReasons, digest, 2);
      return out;
    }
    case PromptKind::ExemplarRewrite:
    case PromptKind::RuleRewrite: {
      std::string out = "Generated Title: ";
      out += pick(kRewriteTitles, digest, 3);
      out += "\nGenerated Body: ";
      out += pick(kRewriteBodies, digest, 4);
      return out;
    }
    case PromptKind::Scoring: {
      // B never scores below A, mirroring the bundled blind-judgment fixtures.
      int a_aud = (util::fnv1a64_mix(digest, 5) & 1) ? 1 : 3;
      int a_mkt = (util::fnv1a64_mix(digest, 6) & 1) ? 1 : 3;
      int b_aud = (util::fnv1a64_mix(digest, 7) & 1) ? 3 : 5;
      std::string out;
      out += "Audience Match Score A: " + std::to_string(a_aud) + "\n";
      out += "Audience Match Reason A: " + std::string(pick(kScoreReasonsA, digest, 8)) + "\n\n";
      out += "Marketing Score A: " + std::to_string(a_mkt) + "\n";
      out += "Marketing Reason A: " + std::string(pick(kScoreReasonsA, digest, 9)) + "\n\n";
      out += "Audience Match Score B: " + std::to_string(b_aud) + "\n";
      out += "Audience Match Reason B: " + std::string(pick(kScoreReasonsB, digest, 10)) + "\n\n";
      out += "Marketing Score B: 5\n";
      out += "Marketing Reason B: " + std::string(pick(kScoreReasonsB, digest, 11));
      return out;
    }
    case PromptKind::Comparison: {
      std::string out = "Preferred Message: B\nReason: ";
      out += pick(kPreferenceReasons, digest, 12);
      return out;
    }
    case PromptKind::ErrorClassification: {
      std::size_t idx = util::fnv1a64_mix(digest, 13) % kErrorLabels.size();
      std::string out = "Error Type: ";
      out += kErrorLabels[idx];
      out += "\nFeedback: ";
      out += kErrorFeedback[idx];
      return out;
    }
  }
  throw ProviderError("unknown prompt kind");
}

}  // namespace

std::string ScriptedProvider::complete(const ProviderRequest& request) {
  if (!request.tag.empty()) {
    auto it = by_target_.find(std::string(prompt_kind_name(request.prompt.kind)) + "/" +
                              request.tag);
    if (it != by_target_.end()) return it->second;
  }
  auto it = by_digest_.find(util::digest16(request.prompt.rendered_text));
  if (it != by_digest_.end()) return it->second;
  return synthesize(request);
}

HttpProvider::HttpProvider(std::string endpoint, std::string api_key_env, int backoff_ms)
    : api_key_env_(std::move(api_key_env)), backoff_ms_(backoff_ms) {
  // split "http://host:port/some/path" into base and path
  auto scheme_end = endpoint.find("://");
  std::size_t path_start =
      scheme_end == std::string::npos ? endpoint.find('/') : endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_ = std::move(endpoint);
    path_ = "/";
  } else {
    base_ = endpoint.substr(0, path_start);
    path_ = endpoint.substr(path_start);
  }
}

std::string HttpProvider::complete(const ProviderRequest& request) {
  nlohmann::json payload;
  payload["model"] = request.model_id;
  payload["prompt"] = request.prompt.rendered_text;
  payload["temperature"] = request.temperature;
  const std::string body = payload.dump();

  httplib::Client client(base_);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(60, 0);
  httplib::Headers headers;
  if (!api_key_env_.empty()) {
    if (const char* key = std::getenv(api_key_env_.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= request.max_retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms_ * (1 << (attempt - 1))));
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "connection failure (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw ProviderError("provider returned status " + std::to_string(res->status));

    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw ProviderError("provider returned invalid json");
    if (j.contains("text") && j["text"].is_string()) return j["text"].get<std::string>();
    if (j.contains("completion") && j["completion"].is_string())
      return j["completion"].get<std::string>();
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
      const auto& choice = j["choices"][0];
      if (choice.contains("message") && choice["message"].contains("content"))
        return choice["message"]["content"].get<std::string>();
      if (choice.contains("text")) return choice["text"].get<std::string>();
    }
    throw ProviderError("provider response carries no text field");
  }
  throw ProviderError("retries exhausted: " + last_error);
}

}  // namespace crmagent::providers
