#include "finforge/domain.hpp"

#include "finforge/ruleverify.hpp"

namespace finforge {

GoldConfidence GoldAnswer::confidence() const noexcept {
  switch (method_) {
    case GoldMethod::axiom:
    case GoldMethod::code_exec: return GoldConfidence::deterministic;
    case GoldMethod::vote: return GoldConfidence::consensus;
    case GoldMethod::human: return GoldConfidence::adjudicated;
  }
  return GoldConfidence::deterministic;
}

GoldAnswer text_gold(std::string_view answer, GoldMethod method) {
  return GoldAnswer(TextGold{normalize_text_answer(answer)}, method);
}

void InstructionTask::promote(VerificationLevel to) {
  if (static_cast<int>(to) < static_cast<int>(level)) {
    throw Error(ErrorCode::conflict,
                "verification level cannot decrease for task " + id.str(),
                std::string(enum_name(level)) + " -> " + std::string(enum_name(to)));
  }
  level = to;
}

bool same_content(const InstructionTask& a, const InstructionTask& b) {
  InstructionTask lhs = a;
  lhs.id = b.id;
  return lhs == b;
}

}  // namespace finforge
