"""
Scoring answers with a judge model
==================================

Live backends have no known quality, so a judge model grades each answer
against a human reference. This shows the exact prompt it receives and how its
reply is read.
"""

from llmroute.scoring import JudgeUnparseable, ScoreRequest, parse_judge_reply, render_judge_prompt

request = ScoreRequest(
    question="Why do leaves change color in autumn?",
    ai_response="Chlorophyll breaks down, revealing yellow and orange pigments.",
    human_response="Trees stop making chlorophyll, so other pigments show through.",
)
print(render_judge_prompt(request))
print("-" * 40)

# without a reference answer
print(render_judge_prompt(ScoreRequest("What is 2 + 2?", "4")).splitlines()[-1])
print("-" * 40)

for reply in ["0.345", "1.000", "0", '"0.7"', "0.8.\nIt is mostly right.", "Score: 0.9 because it is right"]:
    try:
        print(f"{reply!r:40} -> {parse_judge_reply(reply)}")
    except JudgeUnparseable as exc:
        print(f"{reply!r:40} -> rejected ({exc.code})")

# Against a real judge, register it as an HTTP backend:
#
#   registry = BackendRegistry()
#   register_http_backend(registry, "judge", "https://host/v1/chat/completions",
#                         "judge-model", token_env="JUDGE_API_TOKEN")
#   score = score_llm_judge(request, registry, "judge")
