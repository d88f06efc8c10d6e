#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crmagent::util {

// --- hashing ----------------------------------------------------------------

uint64_t fnv1a64(std::string_view data);
uint64_t fnv1a64_mix(uint64_t seed, uint64_t salt);

/// 16-char lowercase hex of fnv1a64, used for template ids, traces and cache keys.
std::string digest16(std::string_view data);
std::string hex16(uint64_t v);

// --- text -------------------------------------------------------------------

std::string trim(std::string_view s);

/// Collapses whitespace runs to single spaces and strips both ends.
std::string normalize_whitespace(std::string_view s);

/// Lowercase copy (ASCII only; labels we parse are ASCII).
std::string to_lower(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

/// Decodes UTF-8 into codepoints; invalid bytes decode as U+FFFD.
std::vector<uint32_t> utf8_codepoints(std::string_view s);

/// Display width in codepoints, for column alignment.
std::size_t display_width(std::string_view s);

/// Escapes '\', '|' and '>' so joined key strings and prompt rows stay unambiguous.
std::string escape_field(std::string_view s);

/// Newlines to spaces plus escape_field; for one-line prompt rows.
std::string flatten_inline(std::string_view s);

// --- numbers ----------------------------------------------------------------

/// Shortest decimal form: integral values print without a fraction ("20", "15.5").
std::string format_decimal(double v);

/// Half-away-from-zero rounding at `decimals` places.
double round_half_up(double v, int decimals);

/// Fixed-point text with half-up rounding ("9.09", "-1.21").
std::string format_fixed(double v, int decimals);

// --- time -------------------------------------------------------------------

/// ISO-8601 instant ("2025-04-03T10:15:00Z", optional ".fff" and "+HH:MM") to
/// epoch seconds. Returns nullopt on malformed or out-of-range input.
std::optional<int64_t> parse_instant(std::string_view s);

/// Epoch seconds to "YYYY-MM-DDTHH:MM:SSZ".
std::string format_instant(int64_t epoch_seconds);

// --- files ------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// --- little-endian binary ---------------------------------------------------

void put_u32(std::string& out, uint32_t v);
void put_u64(std::string& out, uint64_t v);
void put_f32(std::string& out, float v);
uint32_t get_u32(std::string_view in, std::size_t& pos);
uint64_t get_u64(std::string_view in, std::size_t& pos);
float get_f32(std::string_view in, std::size_t& pos);

}  // namespace crmagent::util
