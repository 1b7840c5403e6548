#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "labqg/answer_parser.hpp"
#include "labqg/taxonomy.hpp"

namespace labqg {

/// TELeR prompt-detail levels 1 through 4.
enum class TelerLevel { L1 = 1, L2 = 2, L3 = 3, L4 = 4 };

inline constexpr std::array<TelerLevel, 4> kAllTelerLevels = {TelerLevel::L1, TelerLevel::L2,
                                                               TelerLevel::L3, TelerLevel::L4};

std::string_view to_string(TelerLevel level);
/// Accepts "L1".."L4" and "1".."4".
std::optional<TelerLevel> parse_teler_level(std::string_view name);
inline int level_number(TelerLevel level) { return static_cast<int>(level); }

struct PromptPackage {
  std::string prompt_text;
  TelerLevel level = TelerLevel::L1;
  QuestionType qtype = QuestionType::conceptual;
  QuestionFormat format = QuestionFormat::multiple_choice;
  std::string schema_id;
  std::string slice_digest;
  std::set<std::string> element_manifest;
};

/// Renders one generation prompt. Each level keeps everything the previous
/// level rendered and adds a section:
///   L1  task directive, the slice, the output schema
///   L2  + task detail for the type and format
///   L3  + numbered considerations
///   L4  + characteristics of an ideal response
PromptPackage build_prompt(const ContextSlice& slice, QuestionFormat format, TelerLevel level);

/// sha256 of the slice's canonical JSON.
std::string slice_digest(const ContextSlice& slice);

}  // namespace labqg
