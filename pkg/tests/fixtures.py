"""Small hand-built ranking fixtures shared by the metric and acceptance tests."""

# Three questions; scores chosen so the ranked relevance lists are
# q1 [1,0,1], q2 [0,1,0], q3 [0,0,1].
THREE_Q_RUN = {
    "q1": {"a": 0.9, "b": 0.5, "c": 0.1},
    "q2": {"a": 0.7, "b": 0.6, "c": 0.2},
    "q3": {"a": 0.8, "b": 0.4, "c": 0.3},
}
THREE_Q_QRELS = {
    "q1": {"a": 1, "b": 0, "c": 1},
    "q2": {"a": 0, "b": 1, "c": 0},
    "q3": {"a": 0, "b": 0, "c": 1},
}
# hand evaluation of the definitions
THREE_Q_AP = {"q1": (1 / 1 + 2 / 3) / 2, "q2": 1 / 2, "q3": 1 / 3}
THREE_Q_RR = {"q1": 1.0, "q2": 0.5, "q3": 1 / 3}
THREE_Q_P1 = {"q1": 1.0, "q2": 0.0, "q3": 0.0}

# Six questions for the filtering policy.
SIX_Q_QRELS = {
    "all_pos": {"0": 1, "1": 1, "2": 1},
    "all_neg": {"0": 0, "1": 0},
    "mixed_a": {"0": 1, "1": 0, "2": 0},
    "mixed_b": {"0": 0, "1": 0, "2": 1, "3": 0},
    "single_pos": {"0": 1},
    "single_neg": {"0": 0},
}
SIX_Q_REMOVED = {"all_pos", "all_neg", "single_pos", "single_neg"}
SIX_Q_NO_POSITIVE_REMOVED = {"all_neg", "single_neg"}
