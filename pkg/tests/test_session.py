import json

import pytest

from frwcosmo import expr as ex
from frwcosmo.cosmo import CosmoModel, einstein_equations, reduce_to_friedmann
from frwcosmo.session import (
    SessionArchive, SessionFormatError, SessionVersionError, load_session, save_session,
)


@pytest.fixture(scope="module")
def saved(tmp_path_factory):
    model = CosmoModel()
    system = reduce_to_friedmann(model)
    path = tmp_path_factory.mktemp("s") / "cosmo.json"
    save_session(model, system, path)
    return model, system, path


def test_round_trip(saved):
    model, system, path = saved
    archive = load_session(path)
    assert archive.settings == model.settings()
    for name, e in system.items():
        assert ex.equal(archive.expressions[name], e)
    Ein = einstein_equations(model)
    for a, b in zip(archive.tensors["Ein"].components, Ein.components):
        assert ex.equal(a, b)


def test_deterministic_bytes(saved, tmp_path):
    model, system, path = saved
    other = tmp_path / "again.json"
    save_session(model, system, other)
    assert other.read_bytes() == path.read_bytes()


def test_truncated_file(saved, tmp_path):
    _, _, path = saved
    bad = tmp_path / "bad.json"
    bad.write_text(path.read_text()[:200])
    with pytest.raises(SessionFormatError):
        load_session(bad)


def test_old_version_rejected(saved, tmp_path):
    _, _, path = saved
    doc = json.loads(path.read_text())
    doc["version"] = 0
    old = tmp_path / "old.json"
    old.write_text(json.dumps(doc))
    with pytest.raises(SessionVersionError):
        load_session(old)


def test_foreign_json_rejected():
    with pytest.raises(SessionFormatError):
        SessionArchive.from_json('{"hello": 1}')


def test_without_raw_tensors(tmp_path):
    model = CosmoModel(units="geometric", fluid=False)
    path = tmp_path / "lean.json"
    save_session(model, reduce_to_friedmann(model), path, include_raw=False)
    assert load_session(path).tensors == {}
