# config.py
"""
集中處理所有配置：
1. 環境變數的讀取，例如平行運算的 worker 數量、預設亂數種子與輸出目錄。
2. 全局日誌 (logging) 系統的設定，確保所有日誌都有統一的格式和輸出目的地。
3. 統整分析流程共用的預設常數（日期區間、k 值範圍、交叉驗證折數、排除門檻等），方便在其他模組中引用。
"""
import os # 操作作業系統環境變數
import sys
import logging
from datetime import date
from pathlib import Path
from dotenv import load_dotenv # 載入 .env 檔案中的環境變數
from logging.handlers import TimedRotatingFileHandler

# --- 載入 .env 檔案中的環境變數 ---
# load_dotenv() 會搜尋並讀取同層或父層的 .env，將其轉為系統環境變數，之後可用 os.getenv() 取得
load_dotenv()

# --- 環境變數設定 ---
# 控制 log 顯示的詳細程度
LOG_LEVEL_NAME = os.getenv("LOG_LEVEL", "INFO").upper()
# 指定 log 儲存的檔名
LOG_FILE = os.getenv("LOG_FILE", "pipeline.log")

# 把字串轉成 logging 模組用的數字等級；如果字串無效，就退回 INFO 等級
LOG_LEVEL = getattr(logging, LOG_LEVEL_NAME, logging.INFO)

# 是否啟用檔案 log 輸出
ENABLE_FILE_LOG = os.getenv("ENABLE_FILE_LOG", "False").lower() == "true"

# --- 建立全域 Logger 設定函式 ---
def setup_logging(level: int | None = None) -> None:
    """
    配置根日誌器，並添加兩個處理器 (handler)：一個輸出到終端機，另一個輸出到 log 檔案。
    整個專案共享相同的設定；CLI 的 `--verbose` 會以 level 參數覆寫環境變數。
    """
    root = logging.getLogger() # 取得根日誌器

    # 移除並關閉所有 handler，避免重複設定日誌
    for handler in root.handlers[:]:
        root.removeHandler(handler)
        handler.close()

    effective_level = LOG_LEVEL if level is None else level
    root.setLevel(effective_level)

    # 共用的格式：時間 - logger 名稱 - 等級 - 檔案名稱:行號 - 訊息
    fmt = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s"
    )

    # console handler: 日誌直接輸出到標準輸出 (stdout)
    ch = logging.StreamHandler(sys.stdout)
    ch.setLevel(effective_level)
    ch.setFormatter(fmt)
    root.addHandler(ch)

    # rotating file handler: 記錄完整的 DEBUG 資訊到 log 檔案，只有在 ENABLE_FILE_LOG 為 "true" 時才會啟用
    if ENABLE_FILE_LOG:
        fh = TimedRotatingFileHandler(LOG_FILE, when="midnight", interval=1, backupCount=7, encoding="utf-8")
        fh.setLevel(logging.DEBUG)
        fh.setFormatter(fmt)
        root.addHandler(fh)

logger = logging.getLogger(__name__)

# --- 執行環境設定 ---
# 多次重啟、k 值掃描、交叉驗證網格與森林中的樹都會以這個數量的 worker 平行執行；結果與單執行緒完全相同
try:
    N_JOBS = int(os.getenv("N_JOBS", "1"))
except ValueError:
    logger.error("環境變數 N_JOBS 不是整數，改用 1。")
    N_JOBS = 1

try:
    DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", "42"))
except ValueError:
    logger.error("環境變數 DEFAULT_SEED 不是整數，改用 42。")
    DEFAULT_SEED = 42

DEFAULT_OUTPUT_DIR = Path(os.getenv("DEFAULT_OUTPUT_DIR", "artifacts"))

# --- 專案內建檔案路徑 ---
PROJECT_ROOT = Path(__file__).resolve().parent
MAPPINGS_DIR = PROJECT_ROOT / "mappings"
NYC_MAPPING_PATH = MAPPINGS_DIR / "nyc_dob_fdny.yaml"   # NYC DOB 建築許可 + FDNY 派遣資料的欄位對應
CANONICAL_MAPPING_PATH = MAPPINGS_DIR / "canonical.yaml" # 本專案輸出的標準 CSV 格式的欄位對應

# --- 分析流程的預設值 ---
# 研究資料的期間：2013 ~ 2017 年
DEFAULT_WINDOW = (date(2013, 1, 1), date(2017, 12, 31))

# k-means 多次重啟與 k 值掃描
DEFAULT_K_MIN = 2
DEFAULT_K_MAX = 100
DEFAULT_RESTARTS = 100
DEFAULT_MAX_ITERS = 300
DEFAULT_TOL = 1e-6

# 迴歸模型
DEFAULT_FOLDS = 5
DEFAULT_MIN_INCIDENTS_PER_ZONE = 10
DEFAULT_MODEL_KINDS = ("ols", "tree", "forest")

# 事故數佔全體比例低於此門檻的群集，不進入迴歸分析（3%）
DEFAULT_EXCLUSION_THRESHOLD = 0.03

# 寫入 manifest 的版本號
PACKAGE_VERSION = "1.0.0"
