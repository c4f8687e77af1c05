import pytest

from src.config import ServiceConfig, env_overrides
from src.exception import ConfigError
from src.components.search_index import SearchMode


def write_config(tmp_path, text):
    path = tmp_path / "service.conf"
    path.write_text(text)
    return path


def test_defaults():
    config = ServiceConfig()
    assert (config.host, config.port, config.radius, config.default_k) == ("127.0.0.1", 8000, 2, 10)
    assert config.default_mode is SearchMode.TWO_STAGE
    assert config.index_path is None


def test_file_values(tmp_path):
    path = write_config(tmp_path, "host=0.0.0.0\nport=9001\nindex_path=idx.bin\nradius=3\ndefault_mode=short\ndefault_k=25\nlong_postings=true\n")
    config = ServiceConfig.load(path, environ={})
    assert config.host == "0.0.0.0"
    assert config.port == 9001
    assert config.index_path.name == "idx.bin"
    assert config.radius == 3
    assert config.default_mode is SearchMode.SHORT
    assert config.default_k == 25
    assert config.long_postings is True


def test_environment_overrides_file(tmp_path):
    path = write_config(tmp_path, "port=9001\nradius=2\n")
    config = ServiceConfig.load(path, environ={"HAMSEARCH_PORT": "9100", "HAMSEARCH_RADIUS": "1", "OTHER": "x"})
    assert config.port == 9100
    assert config.radius == 1


def test_env_overrides_ignore_unknown_keys():
    assert env_overrides({"HAMSEARCH_LOG_DIR": "/tmp", "HAMSEARCH_DEFAULT_K": "5"}) == {"default_k": "5"}


@pytest.mark.parametrize(
    "text",
    ["radius=17\n", "default_k=0\n", "port=70000\n", "default_mode=fast\n", "long_postings=maybe\n", "colour=blue\n"],
)
def test_invalid_values(tmp_path, text):
    with pytest.raises(ConfigError):
        ServiceConfig.load(write_config(tmp_path, text), environ={})


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        ServiceConfig.load(tmp_path / "absent.conf", environ={})
