#pragma once

#include "finforge/agentsim.hpp"
#include "finforge/curriculum.hpp"
#include "finforge/domain.hpp"
#include "finforge/funnel.hpp"
#include "finforge/judgeverify.hpp"
#include "finforge/kbgen.hpp"
#include "finforge/ruleverify.hpp"
#include "json.hpp"

/// JSON wire and record formats. Decoders are strict: a missing or
/// mistyped field is Error(malformed) naming the field.
namespace finforge::json {

using nlohmann::json;

json encode(const GoldAnswer& gold);
GoldAnswer decode_gold(const json& j);
json encode_payload(const GoldPayload& payload);
GoldPayload decode_payload(const json& j);

json encode(const EvolutionStrategy& s);
EvolutionStrategy decode_strategy(const json& j);
json encode(const Provenance& p);
Provenance decode_provenance(const json& j);
json encode(const AxiomProvenance& p);
AxiomProvenance decode_axiom_provenance(const json& j);
json encode(const VerificationProgram& p);
VerificationProgram decode_program(const json& j);

json encode(const InstructionTask& task);
InstructionTask decode_task(const json& j);

json encode(const KnowledgePoint& p);
KnowledgePoint decode_point(const json& j);
json encode(const FinancialAxiom& a);
FinancialAxiom decode_axiom(const json& j);
json encode(const InstructionTemplate& t);
InstructionTemplate decode_template(const json& j);

json encode(const Fact& f);
Fact decode_fact(const json& j);
/// `{id, facts: [...]}`.
GroundTruthFactSet decode_fact_set(const json& j);
json encode(const GroundTruthFactSet& s);

json encode(const VerificationRecord& r);
VerificationRecord decode_record(const json& j);
json encode(const AdjudicationItem& item);
AdjudicationItem decode_item(const json& j);
json encode(const CandidateResponse& r);
CandidateResponse decode_response(const json& j);
json encode(const VoteConfig& c);
VoteConfig decode_vote_config(const json& j);

json encode(const RewardBreakdown& b);
json encode(const RuleVerdict& v);
VerifierRouting decode_routing(const json& j, VerifierRouting base);
json encode(const VerifierRouting& r);
RewardWeights decode_weights(const json& j, RewardWeights base);
json encode(const RewardWeights& w);

json encode(const ToolSpec& t);
ToolSpec decode_tool(const json& j);
json encode(const Scenario& s);
Scenario decode_scenario(const json& j);
json encode(const Step& s);
Step decode_step(const json& j);
json encode(const Trajectory& t);
Trajectory decode_trajectory(const json& j);
/// Line-delimited form: one step per line, then a closing
/// `{"final_answer": ..., "truncated": ...}` line.
std::vector<json> trajectory_lines(const Trajectory& t);
json encode(const AgenticScore& s);
AgenticWeights decode_agentic_weights(const json& j, AgenticWeights base);
json encode(const AgentAction& a);
AgentAction decode_action(const json& j);

json encode(const CurriculumConfig& c);
CurriculumConfig decode_curriculum(const json& j, CurriculumConfig base);
json encode(const SampleStats& s);
SampleStats decode_stats(const json& j);
json encode(const Batch& b);
/// One export line per entry and per pruned task:
/// `{task_id, rollout_rewards, pruned_reason?}`.
std::vector<json> batch_lines(const Batch& b);

}  // namespace finforge::json
