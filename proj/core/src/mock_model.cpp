#include <algorithm>
#include <sstream>

#include "labqg/gateway.hpp"
#include "labqg/judge.hpp"

namespace labqg {

namespace {

std::string first_ku_name(std::string_view prompt) {
  const auto section = prompt.find("Knowledge units:\n- [");
  if (section == std::string_view::npos) return "the simulation";
  const auto close = prompt.find("] ", section);
  if (close == std::string_view::npos) return "the simulation";
  const auto start = close + 2;
  const auto end = prompt.find(" (", start);
  if (end == std::string_view::npos) return "the simulation";
  return std::string(prompt.substr(start, end - start));
}

std::vector<std::string> answers_in(std::string_view prompt) {
  std::vector<std::string> out;
  std::istringstream in{std::string(prompt)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("Answer: ", 0) == 0) out.push_back(line.substr(8));
  }
  return out;
}

std::vector<std::string> split_concepts(const std::string& answer) {
  std::string normalized = answer;
  for (const std::string_view sep : {" and ", ";", "."}) {
    std::size_t pos = 0;
    while ((pos = normalized.find(sep, pos)) != std::string::npos) {
      normalized.replace(pos, sep.size(), ",");
    }
  }
  std::vector<std::string> out;
  std::istringstream in(normalized);
  std::string part;
  while (std::getline(in, part, ',')) {
    auto name = trim(part);
    if (name.empty()) continue;
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    if (out.size() == 6) break;
  }
  return out;
}

std::string extraction_reply(std::string_view prompt) {
  const auto answers = answers_in(prompt);
  json j = json::object();
  std::string goals;
  for (const auto& a : answers) {
    if (a.empty()) continue;
    if (!goals.empty()) goals += " ";
    goals += a;
  }
  j["instruction_goals"] = goals;
  j["knowledge_units"] = json::array();
  j["relationships"] = json::array();
  const auto names = answers.empty() ? std::vector<std::string>{} : split_concepts(answers[0]);
  for (std::size_t i = 0; i < names.size(); ++i) {
    json ku = json::object();
    ku["id"] = "k" + std::to_string(i + 1);
    ku["name"] = names[i];
    ku["description"] = "Named by the teacher as a key concept.";
    ku["kind"] = i == 0 ? "input" : (i + 1 == names.size() ? "output" : "observable");
    ku["source_turn"] = 0;
    j["knowledge_units"].push_back(std::move(ku));
  }
  for (std::size_t i = 0; i + 1 < names.size(); ++i) {
    json rel = json::object();
    rel["id"] = "r" + std::to_string(i + 1);
    rel["label"] = names[i] + " affects " + names[i + 1];
    rel["description"] = "Changing " + names[i] + " changes " + names[i + 1] + ".";
    rel["members"] = json::array({"k" + std::to_string(i + 1), "k" + std::to_string(i + 2)});
    rel["directed"] = true;
    rel["source_turn"] = 0;
    j["relationships"].push_back(std::move(rel));
  }
  return j.dump();
}

std::string rating_reply(std::string_view model_id, std::string_view prompt) {
  json j = json::object();
  for (auto c : kAllCriteria) {
    const std::string key(to_string(c));
    const std::string base_key = std::string(prompt) + "|" + key;
    int score = 3 + static_cast<int>(stable_hash64(base_key) % 3);
    const auto wobble = stable_hash64(std::string(model_id) + "|" + base_key) % 5;
    if (wobble == 0) score = std::max(1, score - 1);
    if (wobble == 1) score = std::min(5, score + 1);
    j[key] = score;
  }
  return j.dump();
}

std::string question_reply(QuestionFormat format, std::string_view prompt) {
  const std::string subject = first_ku_name(prompt);
  const auto h = stable_hash64(prompt);
  json j = json::object();
  switch (format) {
    case QuestionFormat::multiple_choice: {
      const int correct = static_cast<int>(h % 4);
      std::vector<std::string> options = {"It stays constant", "It increases", "It decreases",
                                          "It oscillates"};
      j["question"] = "What happens to " + subject + " in the scenario shown in the simulation?";
      j["options"] = options;
      j["answer_index"] = correct;
      j["explanation"] = "Option " + std::to_string(correct + 1) +
                         " matches what students observe for " + subject + ".";
      break;
    }
    case QuestionFormat::multiple_select:
      j["question"] = "Which statements about " + subject + " are supported by the simulation?";
      j["options"] = {"It can be changed directly", "It responds to other variables",
                      "It has no unit", "It is always zero", "It can be measured"};
      j["answer_indices"] = {1, 4};
      j["explanation"] = subject + " responds to other variables and can be measured.";
      break;
    case QuestionFormat::true_false:
      j["question"] = "In the simulation, " + subject + " can be observed while the lab runs.";
      j["answer"] = (h % 2) == 0;
      j["explanation"] = "Students can check this by watching " + subject + ".";
      break;
    case QuestionFormat::fill_in_the_blank:
      j["question"] = "In this simulation, ____ is the quantity students examine first.";
      j["answers"] = {subject};
      j["explanation"] = "The lab focuses on " + subject + ".";
      break;
    case QuestionFormat::free_response_essay:
      j["question"] = "Explain, using evidence from the simulation, how " + subject +
                      " behaves when the conditions change.";
      j["exemplar_points"] = {"Describes the observed change in " + subject,
                              "Cites data gathered in the simulation",
                              "Connects the observation to the underlying relationship"};
      break;
  }
  return j.dump();
}

}  // namespace

std::string MockChatTransport::reply(std::string_view behavior, std::string_view model_id,
                                     std::string_view prompt) {
  if (behavior == "echo") return std::string(prompt);
  if (behavior == "prose") {
    return "Here is a question for your class: what do you notice when you change the settings "
           "in the simulation? Discuss with a partner.";
  }
  if (prompt.find("Rating schema:") != std::string_view::npos) return rating_reply(model_id, prompt);
  if (prompt.find("Representation schema:") != std::string_view::npos) {
    return extraction_reply(prompt);
  }
  constexpr std::string_view kSchemaTag = "Schema id: ";
  if (const auto at = prompt.find(kSchemaTag); at != std::string_view::npos) {
    const auto start = at + kSchemaTag.size();
    const auto end = prompt.find('\n', start);
    const auto* schema = find_schema(prompt.substr(start, end - start));
    if (schema != nullptr) return question_reply(schema->format, prompt);
  }
  return "I am not sure what you are asking for.";
}

}  // namespace labqg
