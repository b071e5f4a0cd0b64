import json

import numpy as np
import pytest

from conftest import random_sdrs
from fpengine.cluster import Cluster, ClusterPolicy
from fpengine.codecs import ImageCodecSpec
from fpengine.cognition import EPISODIC
from fpengine.corpora import (build_agent, episodic_corpus, run_sequence, sensorimotor_corpus,
                              train_episodic, train_sensorimotor, MOTOR)
from fpengine.episodic import DeclarativeMemory
from fpengine.errors import FormatError, ValidationError, VersionError
from fpengine.memory import Cell
from fpengine.persistence import (dumps_model, fmt_real, load_codec, load_model, loads_model,
                                  parse_real, save_model)


def grown_cluster(seed=0):
    c = Cluster(32, ClusterPolicy(0.3, 0.2, 1.0, 5, 4))
    for x in random_sdrs(np.random.default_rng(seed), 300, 32):
        c.process(x)
    return c


def test_reals_round_trip_exactly():
    rng = np.random.default_rng(0)
    xs = np.concatenate([rng.random(9000), rng.random(1000) * 1e-300, [0.0, 1.0, 1 / 3]])
    for x in xs:
        assert parse_real(fmt_real(x), "x") == x


def test_save_twice_byte_identical(tmp_path):
    c = grown_cluster()
    save_model(c, tmp_path / "a.fpe.json")
    save_model(c, tmp_path / "b.fpe.json")
    assert (tmp_path / "a.fpe.json").read_bytes() == (tmp_path / "b.fpe.json").read_bytes()
    assert dumps_model(load_model(tmp_path / "a.fpe.json")) == dumps_model(c)


def test_canonical_form():
    data = dumps_model(Cluster(3))
    doc = json.loads(data)
    assert data.endswith(b"\n") and b" " not in data
    assert data == (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()
    assert doc["magic"] == "FPENG" and doc["version"] == 1 and doc["kind"] == "cluster"
    assert doc["payload"]["cells"][0]["footprints"] == []


def test_cluster_behavioural_identity(tmp_path):
    c = grown_cluster()
    save_model(c, tmp_path / "m.fpe.json")
    d = load_model(tmp_path / "m.fpe.json")
    rng = np.random.default_rng(1)
    for x in random_sdrs(rng, 100, 32):
        m = rng.random(32) < 0.7
        a, b = c.query(x, m), d.query(x, m)
        assert [(i, o.footprint_id) for i, o in a.path] == [(i, o.footprint_id) for i, o in b.path]
        assert np.array_equal(a.projection, b.projection)
    stream = random_sdrs(rng, 50, 32)
    for x in stream:
        c.process(x)
        d.process(x)
    assert c.state_hash() == d.state_hash()


def test_metacluster_and_cognition_round_trip(tmp_path):
    corpus = sensorimotor_corpus()
    mc = train_sensorimotor(corpus, passes=2, archetype_tau=0.5)
    mc2 = loads_model(dumps_model(mc))
    assert mc2.state_hash() == mc.state_hash() and mc2.archetype_tau == 0.5
    for k in range(len(corpus)):
        assert np.array_equal(mc.complete(corpus.sensors(k), MOTOR), mc2.complete(corpus.sensors(k), MOTOR))

    ep = episodic_corpus()
    sc = build_agent(ep, 3, EPISODIC)
    train_episodic(sc, ep)
    sc.step(ep.sensors("a"))
    sc2 = loads_model(dumps_model(sc))
    assert sc2.state_hash() == sc.state_hash()
    assert len(sc2.history) == len(sc.history) == 1
    assert np.array_equal(sc.step(ep.sensors("y")).motor, sc2.step(ep.sensors("y")).motor)
    for seq in ep.sequences:
        r1, r2 = run_sequence(sc, ep, seq), run_sequence(sc2, ep, seq)
        assert [r.decoded_motor for r in r1] == [r.decoded_motor for r in r2]
    assert json.loads(dumps_model(sc))["payload"]["procedural"] is None


def test_declarative_round_trip():
    dm = DeclarativeMemory(3, 2)
    for f in np.eye(3):
        dm.observe(f)
    dm2 = loads_model(dumps_model(dm))
    assert dm2.state_hash() == dm.state_hash() and len(dm2.buffer) == 2
    assert np.array_equal(dm.predict([np.eye(3)[0]]), dm2.predict([np.eye(3)[0]]))


def test_codec_recorded(tmp_path):
    spec = ImageCodecSpec(4, 2, 0.25)
    save_model(Cell(8, 0.0), tmp_path / "c.fpe.json", codec=spec)
    assert load_codec(tmp_path / "c.fpe.json") == spec
    save_model(Cell(8, 0.0), tmp_path / "d.fpe.json")
    assert load_codec(tmp_path / "d.fpe.json") is None


def test_truncated_is_format_error():
    data = dumps_model(grown_cluster())
    for cut in (0, 10, len(data) // 2, len(data) - 3):
        with pytest.raises(FormatError):
            loads_model(data[:cut])


def test_bad_magic_and_version():
    doc = json.loads(dumps_model(Cell(2, 0.5)))
    with pytest.raises(VersionError):
        loads_model(json.dumps({**doc, "version": 2}).encode())
    with pytest.raises(FormatError):
        loads_model(json.dumps({**doc, "magic": "NOPE"}).encode())
    with pytest.raises(FormatError):
        loads_model(json.dumps({**doc, "kind": "teapot"}).encode())


def _cell_doc():
    c = Cell(2, 0.5)
    c.process([1, 0])
    return json.loads(dumps_model(c))


@pytest.mark.parametrize("mutate,field", [
    (lambda d: d["payload"]["footprints"][0].update(count=0), "cell.footprints[0].count"),
    (lambda d: d["payload"]["footprints"][0].update(value=["1.5", "0"]), "cell.footprints[0].value"),
    (lambda d: d["payload"]["footprints"][0].update(value=["1"]), "cell.footprints[0].value"),
    (lambda d: d["payload"].update(theta="2"), "cell.theta"),
    (lambda d: d["payload"]["footprints"][0].update(id=3), "cell.footprints[0].id"),
])
def test_invalid_payload_names_field(mutate, field):
    doc = _cell_doc()
    mutate(doc)
    with pytest.raises(ValidationError) as e:
        loads_model(json.dumps(doc).encode())
    assert e.value.field == field
    assert field in str(e.value)


def test_invalid_cluster_structure():
    doc = json.loads(dumps_model(grown_cluster()))
    cells = doc["payload"]["cells"]
    cells[1]["theta"] = "0.1"
    with pytest.raises(ValidationError) as e:
        loads_model(json.dumps(doc).encode())
    assert e.value.field == "cluster.cells[1].theta"


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError) as e:
        save_model(Cell(2, 0.5), tmp_path / "missing" / "m.fpe.json")
    assert "missing" in str(e.value)
