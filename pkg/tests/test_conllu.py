import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eudparse.conllu import (
    MwtRange,
    NodeId,
    ParseError,
    Sentence,
    SerializeError,
    StructureError,
    Token,
    parse_conllu,
    parse_sentence,
    validate_level2,
    write_conllu,
)

from conftest import sent, synth_treebank, tok


SIMPLE = """# sent_id = a
1\tHe\the\tPRON\t_\t_\t2\tnsubj\t2:nsubj\t_
2\tslept\tsleep\tVERB\t_\t_\t0\troot\t0:root\t_

"""


def test_parse_simple_sentence():
    (s,) = parse_conllu(SIMPLE)
    assert s.comments == ("# sent_id = a",)
    assert [t.form for t in s.tokens] == ["He", "slept"]
    assert s.tokens[0].head == NodeId(2)
    assert s.tokens[0].deps == ((NodeId(2), "nsubj"),)


def test_deps_split_on_first_colon_only():
    line = "1\tx\t_\t_\t_\t_\t0\troot\t4:nsubj|6:nsubj:xsubj\t_"
    s = parse_sentence([line])
    assert s.tokens[0].deps == ((NodeId(4), "nsubj"), (NodeId(6), "nsubj:xsubj"))


def test_deps_underscore_is_empty():
    s = parse_sentence(["1\tx\t_\t_\t_\t_\t0\troot\t_\t_"])
    assert s.tokens[0].deps == ()


def test_empty_node_id_parses():
    assert NodeId.parse("3.1") == NodeId(3, 1)
    assert str(NodeId(3, 1)) == "3.1"
    assert str(NodeId(4)) == "4"


def test_malformed_line_reports_line_number():
    text = SIMPLE.replace("2\tslept\tsleep\tVERB\t_\t_\t0\troot\t0:root\t_",
                          "2\tslept\tsleep")
    with pytest.raises(ParseError) as err:
        parse_conllu(text)
    assert "line 3" in str(err.value)


def test_nonmonotonic_ids_rejected():
    text = "1\ta\t_\t_\t_\t_\t0\troot\t0:root\t_\n3\tb\t_\t_\t_\t_\t1\tdet\t1:det\t_\n"
    with pytest.raises(StructureError):
        parse_conllu(text)


def test_empty_node_with_head_rejected():
    lines = ["1\ta\t_\t_\t_\t_\t0\troot\t0:root\t_",
             "1.1\tb\t_\t_\t_\t_\t1\tdet\t_\t_"]
    with pytest.raises(ParseError):
        parse_sentence(lines)


def test_mwt_and_empty_node_round_trip():
    text = (
        "# text = won't stop\n"
        "1-2\twon't\t_\t_\t_\t_\t_\t_\t_\tSpaceAfter=No\n"
        "1\twill\twill\tAUX\t_\t_\t3\taux\t3:aux\t_\n"
        "2\tnot\tnot\tPART\t_\t_\t3\tadvmod\t3:advmod\t_\n"
        "3\tstop\tstop\tVERB\t_\t_\t0\troot\t0:root\t_\n"
        "3.1\tnow\tnow\tADV\t_\t_\t_\t_\t3:advmod\t_\n"
        "\n"
    )
    sentences = parse_conllu(text)
    assert write_conllu(sentences) == text
    assert sentences[0].mwt_ranges == (MwtRange(1, 2, "won't", misc="SpaceAfter=No"),)


def test_consecutive_mwt_lines_rejected():
    text = ("1-2\tab\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "3-4\tcd\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "1\ta\t_\t_\t_\t_\t0\troot\t0:root\t_\n")
    with pytest.raises(StructureError):
        parse_conllu(text)


def test_write_sorts_deps_by_head():
    s = sent([tok("1", "a", 2, "det", [("2", "det")]),
              tok("2", "b", 0, "root", [("0", "root")])])
    unsorted_token = Token(id=NodeId(1), form="a", head=NodeId(2), deprel="det",
                           deps=((NodeId(6), "obl:in"), (NodeId(4), "nsubj")))
    # bypass sorting in the builder on purpose: the writer must sort
    s = Sentence(tokens=(unsorted_token,) + s.tokens[1:])
    out = write_conllu([s])
    assert "4:nsubj|6:obl:in" in out


def test_write_empty_list():
    assert write_conllu([]) == ""


def test_duplicate_dep_pair_refused_on_write():
    bad = Token(id=NodeId(1), form="a", deps=((NodeId(0), "root"), (NodeId(0), "root")))
    with pytest.raises(SerializeError) as err:
        write_conllu([Sentence(tokens=(bad,))])
    assert "sentence 0" in str(err.value)


def test_round_trip_fixture_treebank():
    sentences = synth_treebank(40, seed=3)
    text = write_conllu(sentences)
    assert parse_conllu(text) == sentences
    assert write_conllu(parse_conllu(text)) == text


def test_no_lines_silently_dropped():
    sentences = synth_treebank(25, seed=11)
    text = write_conllu(sentences)
    content_lines = [l for l in text.splitlines() if l and not l.startswith("#")]
    parsed = parse_conllu(text)
    emitted = sum(len(s.tokens) + len(s.mwt_ranges) for s in parsed)
    assert len(content_lines) == emitted


class TestValidateLevel2:
    def test_valid_sentence(self):
        s = sent([tok("1", "a", 2, "det", [("2", "det")]),
                  tok("2", "b", 0, "root", [("0", "root")])])
        assert validate_level2(s) == []

    def test_self_loop(self):
        s = sent([tok("1", "a", 0, "root", [("0", "root")]),
                  tok("2", "b", 1, "conj", [("2", "conj")])])
        codes = [v.code for v in validate_level2(s)]
        assert codes == ["self-loop"]
        assert validate_level2(s)[0].node == NodeId(2)

    def test_dangling_head(self):
        s = sent([tok("1", "a", 0, "root", [("0", "root"), ("99", "det")])])
        codes = [v.code for v in validate_level2(s)]
        assert "dangling-head" in codes

    def test_missing_root_edge(self):
        s = sent([tok("1", "a", 2, "det", [("2", "det")]),
                  tok("2", "b", 0, "root", [("1", "conj")])])
        assert [v.code for v in validate_level2(s)] == ["no-root-edge"]

    def test_mwt_span_length(self):
        s = sent([tok("1", "a", 0, "root", [("0", "root")])], mwts=[(1, 1, "a")])
        assert [v.code for v in validate_level2(s)] == ["mwt-span"]

    def test_nonconsecutive_ids(self):
        s = Sentence(tokens=(tok("1", "a", 0, "root", [("0", "root")]),
                             tok("3", "b", 1, "det", [("1", "det")])))
        assert "nonconsecutive-ids" in [v.code for v in validate_level2(s)]

    def test_duplicate_dep(self):
        bad = Token(id=NodeId(1), form="a", deps=((NodeId(0), "root"), (NodeId(0), "root")))
        assert "duplicate-dep" in [v.code for v in validate_level2(Sentence(tokens=(bad,)))]


_LABEL = st.from_regex(r"[a-z]{2,6}(:[a-z]{2,5})?", fullmatch=True)
_FORM = st.from_regex(r"[A-Za-z]{1,8}", fullmatch=True)


@st.composite
def sentences(draw):
    n = draw(st.integers(min_value=1, max_value=6))
    empties = {i: draw(st.integers(min_value=0, max_value=2)) for i in range(n + 1)}
    if n < 2:
        empties[0] = 0
    node_ids = []
    for major in range(n + 1):
        if major > 0:
            node_ids.append(NodeId(major))
        for minor in range(1, empties.get(major, 0) + 1):
            node_ids.append(NodeId(major, minor))
    heads = [NodeId(0)] + node_ids
    tokens = []
    made_root = False
    for nid in node_ids:
        deps = {}
        for _ in range(draw(st.integers(min_value=0, max_value=2))):
            head = draw(st.sampled_from(heads))
            if head == nid:
                continue
            deps[(head, draw(_LABEL))] = None
        if not made_root and not nid.is_empty:
            deps[(NodeId(0), "root")] = None
            made_root = True
        tokens.append(Token(
            id=nid,
            form=draw(_FORM),
            lemma=draw(_FORM),
            head=None if nid.is_empty else draw(st.sampled_from([h for h in heads if not h.is_empty])),
            deprel="_" if nid.is_empty else draw(_LABEL),
            deps=tuple(sorted(deps, key=lambda hl: (hl[0].major, hl[0].minor, hl[1]))),
        ))
    return Sentence(comments=("# generated",), tokens=tuple(tokens))


@given(sentences())
@settings(max_examples=60, deadline=None)
def test_round_trip_property(sentence):
    text = write_conllu([sentence])
    assert parse_conllu(text) == [sentence]
