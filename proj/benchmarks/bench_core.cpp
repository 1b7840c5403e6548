#include <benchmark/benchmark.h>

#include <random>

#include "labqg/bench.hpp"
#include "labqg/fixtures.hpp"

namespace {

using namespace labqg;

const std::string kNoisyReply =
    "Here is your question:\n```json\n"
    R"({"question": "Which change raises the pressure of a sealed gas?", )"
    R"("options": ["Cooling it", "Heating it", "Removing particles", "Enlarging it"], )"
    R"("answer_index": 1, "explanation": "Faster particles hit the walls harder."})"
    "\n```\nLet me know if you need more.";

void BM_ExtractJson(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(extract_json(kNoisyReply));
}
BENCHMARK(BM_ExtractJson);

void BM_Classify(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify(kNoisyReply, QuestionFormat::multiple_choice));
  }
}
BENCHMARK(BM_Classify);

void BM_KrippendorffAlpha(benchmark::State& state) {
  std::mt19937_64 rng(1);
  RatingMatrix m(3, std::vector<std::optional<int>>(static_cast<std::size_t>(state.range(0))));
  for (auto& row : m) {
    for (auto& cell : row) cell = std::uniform_int_distribution<int>(1, 5)(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(krippendorff_alpha(m));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KrippendorffAlpha)->Range(10, 10000)->Complexity();

void BM_MakePlanFull(benchmark::State& state) {
  const auto conversations = fixture_plan_conversations(8);
  ModelConfig m;
  m.name = m.model_id = "m";
  m.endpoint_url = "mock://perfect";
  const std::vector<TelerLevel> levels(kAllTelerLevels.begin(), kAllTelerLevels.end());
  for (auto _ : state) benchmark::DoNotOptimize(make_plan(conversations, {m}, levels));
}
BENCHMARK(BM_MakePlanFull)->Unit(benchmark::kMillisecond);

void BM_BuildPrompt(benchmark::State& state) {
  const auto& s = fixture_conversations().front().conversation.representation;
  const auto slice = context_for(s, QuestionType::causal_chain, 0);
  const auto level = static_cast<TelerLevel>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_prompt(slice, QuestionFormat::fill_in_the_blank, level));
  }
}
BENCHMARK(BM_BuildPrompt)->DenseRange(1, 4);

void BM_MockCell(benchmark::State& state) {
  ModelConfig m;
  m.name = m.model_id = "m";
  m.endpoint_url = "mock://perfect";
  const auto plan = make_plan(fixture_plan_conversations(1), {m}, {TelerLevel::L4});
  Gateway gw;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_cell(plan, plan.cells[i++ % plan.cells.size()], gw));
  }
}
BENCHMARK(BM_MockCell);

}  // namespace
BENCHMARK_MAIN();
