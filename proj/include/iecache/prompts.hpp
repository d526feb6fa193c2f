// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace iecache {

// Prompt templates. Placeholders are written {{name}}.
struct PromptSet {
  std::string system;
  std::string schema_induction;
  std::string extraction;
  std::string extraction_focus_slots;  // appended when focus slots are allowed
  std::string monolithic;
  std::string update;
  std::string self_check;
  std::string reason;
  std::string fallback;
  std::string repair;
  std::string generic;
  std::string cot;
  std::string react;
  std::string react_fallback;
  std::string family_qa;
  std::string family_planning;
  std::string family_summarization;

  static const PromptSet& defaults();

  // Replaces each template for which `<dir>/<name>.txt` exists.
  static PromptSet load_overrides(const std::filesystem::path& dir);
};

// Substitutes {{key}} placeholders. Unknown placeholders throw ConfigError.
std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars);

}  // namespace iecache
