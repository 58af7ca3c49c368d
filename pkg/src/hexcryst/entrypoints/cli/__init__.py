import logging
from logging.handlers import RotatingFileHandler
import os

from hexcryst.config import Config


def configure_logging(config_class=Config, verbose: bool = False) -> logging.Logger:
    logger = logging.getLogger('hexcryst')
    if logger.handlers:
        return logger

    if verbose:
        stream_handler = logging.StreamHandler()
        stream_handler.setLevel(logging.DEBUG)
        logger.addHandler(stream_handler)
        logger.setLevel(logging.DEBUG)
    elif not config_class.TESTING:
        if config_class.LOG_TO_STDOUT:
            stream_handler = logging.StreamHandler()
            stream_handler.setLevel(logging.INFO)
            logger.addHandler(stream_handler)
        else:
            if not os.path.exists(config_class.LOG_DIR):
                os.mkdir(config_class.LOG_DIR)
            file_handler = RotatingFileHandler(os.path.join(config_class.LOG_DIR, 'hexcryst.log'),
                                               maxBytes=10240, backupCount=10)
            file_handler.setFormatter(logging.Formatter(
                '%(asctime)s %(levelname)s: %(message)s '
                '[in %(pathname)s:%(lineno)d]'))
            file_handler.setLevel(logging.INFO)
            logger.addHandler(file_handler)
        logger.setLevel(logging.INFO)

    logger.info('hexcryst startup')
    return logger
