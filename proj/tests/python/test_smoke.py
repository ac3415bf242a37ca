import json
import os

import pytest

import widenet

DATA = os.environ.get(
    "WIDENET_TEST_DATA", os.path.join(os.path.dirname(__file__), "..", "data"))


def data(name):
    return os.path.join(DATA, name)


@pytest.fixture(scope="module")
def graph():
    return widenet.load_graph(data("graph_nodes.tsv"), data("graph_edges.tsv"))


@pytest.fixture(scope="module")
def index():
    docs, warnings = widenet.parse_corpus(data("fixture_corpus.jsonl"))
    assert warnings == []
    return widenet.CorpusIndex(docs)


def test_clues_and_classification():
    clues = widenet.extract_clues("the occupation of 1940-1945")
    assert clues.years == {1940, 1945}
    assert clues.intervals == {(1940, 1945)}
    period = widenet.Period(1930, 1950)
    assert widenet.classify_entity(clues, period) == widenet.TemporalClass.InPeriod
    assert widenet.classify_entity(widenet.extract_clues(""), period) == \
        widenet.TemporalClass.Undated
    with pytest.raises(widenet.WidenetError):
        widenet.Period(1950, 1930)


def test_prune_categories():
    rows = widenet.prune_categories(
        {"c": {"a", "b", "d"}},
        {"a": "out_of_period", "b": "out_of_period", "d": "in_period"})
    assert rows == [{"category": "c", "auto_selected": False,
                     "dated_member_count": 3, "out_of_period_count": 2}]


def test_graph(graph):
    assert len(graph.category_ids) == 12
    assert len(graph.entity_ids) == 48
    assert "Museums_in_Amsterdam" in graph.descendant_categories({"Dutch_Golden_Age"}, 2)
    with pytest.raises(widenet.WidenetError) as err:
        graph.descendant_categories({"Nope"}, 2)
    assert err.value.code == "not_found"


def test_fixture_is_deterministic(graph):
    mix = open(data("fixture_mix.json"), encoding="utf-8").read()
    a, truth_a = widenet.generate_fixture(7, 50, graph, mix)
    b, truth_b = widenet.generate_fixture(7, 50, graph, mix)
    assert [d.text for d in a] == [d.text for d in b]
    assert truth_a == truth_b


def test_index_and_session(graph, index, tmp_path):
    assert index.document_count == 200
    freq = index.frequencies({"Rembrandt", "Judith_Leyster"})
    assert freq["Judith_Leyster"]["absent"]
    assert freq["Rembrandt"]["documents"] == len(index.retrieve({"Rembrandt"}))

    snap = tmp_path / "index.json"
    index.save_snapshot(str(snap))
    again = widenet.CorpusIndex.load_snapshot(str(snap))
    assert again.frequencies({"Rembrandt"}) == index.frequencies({"Rembrandt"})

    s = widenet.Session.create(graph, {"Dutch_Golden_Age"}, widenet.Period(1588, 1702))
    assert len(s.effective_query()) == 20
    assert s.missing_entities(index) == {"Halve_Maen", "Judith_Leyster", "Raid_on_the_Medway"}
    s.toggle_category("Anglo-Dutch_Wars")
    first = s.results(index)[0]
    s.assess_document(index, first, "relevant")
    replayed = widenet.Session.replay(graph, s.audit_lines(), index)
    assert replayed.effective_query() == s.effective_query()
    lines = s.export_corpus(index).splitlines()
    assert json.loads(lines[0])["record"] == "header"
    assert [json.loads(l)["doc_id"] for l in lines[1:]] == [first]


def test_api(graph, index):
    api = widenet.Api(graph, index)
    status, ctype, body = api.handle("GET", "/health")
    assert status == 200 and ctype == "application/json"
    assert json.loads(body)["docs"] == 200
    status, _, body = api.handle(
        "POST", "/sessions", body=json.dumps(
            {"roots": ["Dutch_Golden_Age"], "period": [1588, 1702]}))
    assert status == 201
    sid = json.loads(body)["session"]["id"]
    status, _, body = api.handle("GET", f"/sessions/{sid}/aggregate", {"dimension": "party"})
    assert status == 200
    status, _, body = api.handle("GET", "/sessions/missing-session")
    assert status == 404
    assert json.loads(body)["error"]["code"] == "not_found"
