"""Hand-labeled extraction fixtures shared by the unit and acceptance suites.

Each entry is (name, text, expected code blocks, expected boxed answer).
The labels were worked out by hand from the extraction rules: last balanced
box wins, Bangla numerals normalize to ASCII, whitespace and commas inside
the box are ignored, fenced blocks run from the line after the opening fence
to the closing fence, and an unterminated final fence keeps the remainder.
"""

FIXTURES: list[tuple[str, str, list[str], int | None]] = [
    ("simple_boxed", "The answer is \\boxed{17}.", [], 17),
    ("last_boxed_wins", "\\boxed{3} then finally \\boxed{12}", [], 12),
    ("three_boxed_adjacent", "\\boxed{1}\\boxed{2}\\boxed{3}", [], 3),
    ("bangla_numerals", "\u0989\u09a4\u09cd\u09a4\u09b0 \\boxed{৪২}", [], 42),
    ("bangla_ascii_mixed", "\\boxed{4২}", [], 42),
    ("bangla_comma_spaces", "\\boxed{ ১,২৩৪ }", [], 1234),
    ("comma_separators", "\\boxed{1,234,567}", [], 1234567),
    ("inner_spaces", "\\boxed{ 256 }", [], 256),
    ("newline_in_box", "\\boxed{12\n}", [], 12),
    ("zero", "\\boxed{0}", [], 0),
    ("leading_zeros", "\\boxed{007}", [], 7),
    ("big_integer", "\\boxed{123456789012345}", [], 123456789012345),
    ("negative_rejected", "\\boxed{-5}", [], None),
    ("float_rejected", "\\boxed{3.5}", [], None),
    ("empty_box", "\\boxed{}", [], None),
    ("symbolic_rejected", "\\boxed{x+1}", [], None),
    ("latex_fraction_rejected", "\\boxed{\\frac{1}{2}}", [], None),
    ("extra_braces_rejected", "\\boxed{{5}}", [], None),
    ("unbalanced_after_balanced", "ok \\boxed{3} later \\boxed{5", [], 3),
    ("unbalanced_only", "\\boxed{5", [], None),
    ("no_boxed_at_all", "just text mentioning 42", [], None),
    ("empty_text", "", [], None),
    (
        "single_block",
        "text ```python\nprint(1)\n``` more",
        ["print(1)\n"],
        None,
    ),
    (
        "two_blocks_in_order",
        "```python\na = 1\n```\nmiddle\n```python\nb = 2\n```",
        ["a = 1\n", "b = 2\n"],
        None,
    ),
    (
        "three_blocks_in_order",
        "```\nfirst\n```\n```\nsecond\n```\n```\nthird\n```",
        ["first\n", "second\n", "third\n"],
        None,
    ),
    (
        "unterminated_fence",
        "intro ```python\nwhile True:\n    pass",
        ["while True:\n    pass"],
        None,
    ),
    ("untagged_block", "```\nx = 5\n```", ["x = 5\n"], None),
    ("whitespace_only_block_dropped", "```python\n   \n```", [], None),
    ("fence_at_end_of_text", "text ```", [], None),
    (
        "midline_fence_with_answer",
        "prose ```py\ncompute()\n``` tail \\boxed{6}",
        ["compute()\n"],
        6,
    ),
    (
        "boxed_inside_code_block",
        '```python\nprint("\\boxed{11}")\n```',
        ['print("\\boxed{11}")\n'],
        11,
    ),
    (
        "prose_box_after_code_box",
        "```python\nprint('\\boxed{8}')\n```\nI believe it is \\boxed{999}",
        ["print('\\boxed{8}')\n"],
        999,
    ),
    (
        "indentation_preserved",
        "```python\nfor i in range(3):\n\tprint(i)\n```",
        ["for i in range(3):\n\tprint(i)\n"],
        None,
    ),
    (
        "crlf_block",
        "```python\r\nx = 1\r\n```",
        ["x = 1\r\n"],
        None,
    ),
    (
        "bangla_text_code_and_box",
        "সমাধান:\n```python\nprint(2 * 3)\n```\nতাহলে \\boxed{৬}",
        ["print(2 * 3)\n"],
        6,
    ),
]
