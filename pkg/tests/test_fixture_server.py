"""
API tests for the fixture translation server
"""
from unittest.mock import patch

import pytest
from fastapi.testclient import TestClient

from app.errors import DataError
from app.main import app, fixture_table, load_table
from app.models import BackendKind, BackendSpec
from app.services.translation import HttpBackend


@pytest.fixture
def table(tmp_path):
    path = tmp_path / "table.tsv"
    path.write_text("She said: hello\tהיא אמרה: שלום\n", encoding="utf-8")
    load_table(str(path))
    yield path
    fixture_table.clear()


def test_health_endpoint(table):
    """Test the health check endpoint"""
    client = TestClient(app)
    response = client.get("/health")
    assert response.status_code == 200
    data = response.json()
    assert data["status"] == "healthy"
    assert data["fixture_rows"] == 1


def test_translate_hit(table):
    client = TestClient(app)
    response = client.post("/translate", json={"text": "She said: hello", "source": "en", "target": "he"})
    assert response.status_code == 200
    assert response.json() == {"translation": "היא אמרה: שלום"}


def test_translate_miss(table):
    client = TestClient(app)
    response = client.post("/translate", json={"text": "He said: hello"})
    assert response.status_code == 404


def test_api_key_required(table):
    client = TestClient(app)
    with patch('app.main.settings') as mock_settings:
        mock_settings.FIXTURE_SERVER_API_KEY = "secret"
        assert client.post("/translate", json={"text": "She said: hello"}).status_code == 401
        response = client.post(
            "/translate",
            json={"text": "She said: hello"},
            headers={"Authorization": "Bearer secret"},
        )
        assert response.status_code == 200


def test_load_table_rejects_malformed_file(tmp_path):
    path = tmp_path / "broken.tsv"
    path.write_text("no tab\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_table(str(path))


def test_http_backend_against_server(table, monkeypatch):
    """The generic JSON adapter reads the server's response shape"""
    monkeypatch.setenv("FIXTURE_KEY", "secret")
    spec = BackendSpec(name="server", kind=BackendKind.HTTP, source_lang="en", target_lang="he",
                       endpoint="http://testserver/translate", credentials_env="FIXTURE_KEY")
    backend = HttpBackend(spec, session=TestClient(app))
    with patch('app.main.settings') as mock_settings:
        mock_settings.FIXTURE_SERVER_API_KEY = "secret"
        assert backend.translate("She said: hello") == "היא אמרה: שלום"
