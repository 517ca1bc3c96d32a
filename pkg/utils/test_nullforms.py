"""Tests for the null-form constructors and the system database."""

import json
import os

import pytest

import nullforms
from vectorfield import SystemDocumentError, system_from_document


def test_corpus_names():
    assert sorted(nullforms.corpus()) == sorted(nullforms.load_system_database())


def test_builtin_documents_parse():
    for name, doc in nullforms.builtin_documents().items():
        assert system_from_document(doc).name == name


def test_equilibrium_order_must_be_positive():
    with pytest.raises(ValueError):
        nullforms.sigma_p0k(0)


def test_unknown_generator_list():
    with pytest.raises(ValueError):
        nullforms.symmetry_generators('Q')


def test_save_and_load(tmp_path):
    path = str(tmp_path / 'db.json')
    db = nullforms.builtin_documents()
    nullforms.save_system_database(db, path)
    assert nullforms.load_system_database(path) == db


def test_missing_database_is_empty(tmp_path):
    assert nullforms.load_system_database(str(tmp_path / 'missing.json')) == {}


def test_corrupt_database_warns(tmp_path, capsys):
    path = tmp_path / 'broken.json'
    path.write_text('{not json')
    assert nullforms.load_system_database(str(path)) == {}
    assert 'Could not load system database' in capsys.readouterr().out


class TestLoadDocument:

    def test_single_document(self, systems_dir):
        doc = nullforms.load_system_document(os.path.join(systems_dir, 'sigma_e.json'))
        assert doc['kind'] == 'E'

    def test_database_entry(self):
        doc = nullforms.load_system_document(nullforms.DEFAULT_DB_PATH, 'sigma_p0k_2')
        assert system_from_document(doc) == nullforms.sigma_p0k(2)

    def test_database_needs_a_name(self):
        with pytest.raises(SystemDocumentError):
            nullforms.load_system_document(nullforms.DEFAULT_DB_PATH)

    def test_unknown_name(self):
        with pytest.raises(SystemDocumentError, match='sigma_q'):
            nullforms.load_system_document(nullforms.DEFAULT_DB_PATH, 'sigma_q')

    def test_single_entry_database(self, tmp_path):
        path = tmp_path / 'one.json'
        path.write_text(json.dumps({'only': nullforms.sigma_h().to_document()}))
        doc = nullforms.load_system_document(str(path))
        assert system_from_document(doc) == nullforms.sigma_h()

    def test_name_mismatch(self, systems_dir):
        with pytest.raises(SystemDocumentError):
            nullforms.load_system_document(os.path.join(systems_dir, 'sigma_e.json'), 'sigma_h')

    def test_top_level_list(self, tmp_path):
        path = tmp_path / 'list.json'
        path.write_text('[1, 2, 3]')
        with pytest.raises(SystemDocumentError):
            nullforms.load_system_document(str(path))
