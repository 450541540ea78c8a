import logging
import os
import sys

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
LOG_FILENAME = 'ptchain.log'

logger = logging.getLogger('ptchain')


class UnicodeSafeFormatter(logging.Formatter):
    """Custom formatter that handles Unicode characters safely on Windows console"""
    def format(self, record):
        msg = super().format(record)
        encoding = getattr(sys.stderr, 'encoding', None) or 'utf-8'
        try:
            return msg.encode(encoding, errors='replace').decode(encoding)
        except (LookupError, UnicodeError):
            return msg


def configure_logging(output_dir='outputs', verbose=False):
    """Send log records to <output_dir>/ptchain.log and to stderr.

    Safe to call more than once: earlier handlers are replaced, so each run
    logs next to its own outputs.
    """
    os.makedirs(output_dir, exist_ok=True)
    log_path = os.path.join(output_dir, LOG_FILENAME)

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        handlers=[
            logging.FileHandler(log_path, encoding='utf-8'),
            logging.StreamHandler()
        ],
        force=True
    )

    for handler in logging.getLogger().handlers:
        handler.setFormatter(UnicodeSafeFormatter(LOG_FORMAT))

    # per-matrix DEBUG chatter only in verbose runs
    logging.getLogger('ptchain').setLevel(logging.DEBUG if verbose else logging.INFO)
    return log_path


def log_info(message):
    """Log info message"""
    logger.info(message)

def log_error(message):
    """Log error message"""
    logger.error(message)

def log_warning(message):
    """Log warning message"""
    logger.warning(message)

def log_debug(message):
    """Log debug message"""
    logger.debug(message)

def log_success(message):
    """Log success message"""
    logger.info(f"✅ {message}")

def log_step(step_name):
    """Log step separator"""
    logger.info("=" * 60)
    logger.info(f"🚀 {step_name}")
    logger.info("=" * 60)
