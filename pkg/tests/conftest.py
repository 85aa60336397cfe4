# tests/conftest.py
"""
測試共用設定：把專案根目錄加入 sys.path（專案以扁平的頂層套件組成，main.py 也是這樣匯入），
並提供測試資料夾與欄位對應設定檔的 fixture。
"""
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from config import CANONICAL_MAPPING_PATH, NYC_MAPPING_PATH  # noqa: E402
from ingestion.column_mapping import load_column_mapping  # noqa: E402

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def nyc_mapping():
    return load_column_mapping(NYC_MAPPING_PATH)


@pytest.fixture(scope="session")
def canonical_mapping():
    return load_column_mapping(CANONICAL_MAPPING_PATH)
