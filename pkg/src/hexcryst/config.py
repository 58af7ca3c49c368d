import os
from dotenv import load_dotenv

basedir = os.path.abspath(os.path.dirname(__file__))
load_dotenv(os.path.join(basedir, '.hexcrystenv'))


class Config:
    THREADS = int(os.environ.get('HEXCRYST_THREADS') or 1)
    LOG_TO_STDOUT = os.environ.get('LOG_TO_STDOUT')
    LOG_DIR = os.environ.get('HEXCRYST_LOG_DIR') or 'logs'
    RUNS_DIR = os.environ.get('HEXCRYST_RUNS_DIR') or 'runs'
    TOL_MASS = float(os.environ.get('TOL_MASS') or 1e-8)
    TESTING = False
