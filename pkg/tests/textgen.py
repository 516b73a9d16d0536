"""Random issue-like text built from technical and plain fragments."""
import random

FRAGMENTS = [
    "fixed", "the", "patch", "in", "trunk", "thanks", "won't", "reproduce", "see", "and",
    "https://issues.example.org/browse/X-1", "http://a.b/c?d=1&e=2", "www.example.com/page",
    "ftp://host/file.txt", "john.doe@example.org", "a@b.io", "[~jsmith]", "@alice", "@b",
    "/etc/app/conf.yaml", "src/main/java/Foo.java", "./build/out.log", "C:\\tmp\\x.ini",
    "~/.m2/settings.xml", "1.2.3", "v2.5.0-beta", "3.0.x", "2.1-SNAPSHOT", "version 4.2",
    "+1", "+1.", "1+1", "42", "3,000", "0.75", "404", "a12", "12a", "x_y", "foo_bar_baz",
    "{code}int x = 1;{code}", "{noformat}trace{noformat}", "<pre>exit(0);</pre>",
    "<code>a.b()</code>", "```\nfoo();\n```", "\n    int a = b;\n    call(a);\n",
    "url_specification", "number_specification", "code_specification", "user_specification",
    ",", ".", "!", "(", ")", ":", ";", "=", "{", "}", "\"", "'", "-", "/", "\\", "@", "+",
    "\t", "\n", "  ", "ü", "é", "日本",
]


def random_text(rng: random.Random, max_len: int = 25) -> str:
    parts = []
    for _ in range(rng.randint(0, max_len)):
        parts.append(rng.choice(FRAGMENTS))
        parts.append(rng.choice(["", " ", " ", " ", "\n", ", "]))
    return "".join(parts)
