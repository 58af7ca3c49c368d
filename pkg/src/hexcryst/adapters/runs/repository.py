from typing import Any, Dict, List, Sequence
import abc
import csv
import json
import os

import numpy as np


class AbstractRunRepository(abc.ABC):

    @abc.abstractmethod
    def create(self, name: str) -> str:
        raise NotImplementedError

    @abc.abstractmethod
    def add_document(self, run_id: str, name: str, payload: Dict[str, Any]):
        raise NotImplementedError

    @abc.abstractmethod
    def add_table(self, run_id: str, name: str, header: Sequence[str], rows: List[Sequence[Any]]):
        raise NotImplementedError

    @abc.abstractmethod
    def add_text(self, run_id: str, name: str, text: str):
        raise NotImplementedError

    @abc.abstractmethod
    def get_document(self, run_id: str, name: str) -> Dict[str, Any]:
        raise NotImplementedError

    @abc.abstractmethod
    def list(self) -> List[str]:
        raise NotImplementedError


class FileSystemRunRepository(AbstractRunRepository):
    """One directory per run under ``root``; a run id is the directory name."""

    def __init__(self, root: str):
        self.root = root

    def path(self, run_id: str, name: str = '') -> str:
        return os.path.join(self.root, run_id, name)

    def create(self, name: str) -> str:
        os.makedirs(self.root, exist_ok=True)
        run_id, k = name, 1
        while os.path.exists(self.path(run_id)):
            k += 1
            run_id = f'{name}-{k}'
        os.makedirs(self.path(run_id))
        return run_id

    def add_document(self, run_id: str, name: str, payload: Dict[str, Any]):
        with open(self.path(run_id, name), 'w') as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
            fh.write('\n')

    def add_table(self, run_id: str, name: str, header: Sequence[str], rows: List[Sequence[Any]]):
        with open(self.path(run_id, name), 'w', newline='') as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)

    def add_text(self, run_id: str, name: str, text: str):
        with open(self.path(run_id, name), 'w') as fh:
            fh.write(text)

    def get_document(self, run_id: str, name: str) -> Dict[str, Any]:
        with open(self.path(run_id, name)) as fh:
            return json.load(fh)

    def list(self) -> List[str]:
        if not os.path.isdir(self.root):
            return []
        return sorted(d for d in os.listdir(self.root) if os.path.isdir(os.path.join(self.root, d)))


def read_points(path: str) -> np.ndarray:
    """Reads an ``x,y[,mass]`` CSV of points; a header line and ``#`` comments are skipped."""
    try:
        data = np.loadtxt(path, delimiter=',', ndmin=2, comments='#')
    except ValueError:
        data = np.loadtxt(path, delimiter=',', ndmin=2, comments='#', skiprows=1)
    if data.shape[1] not in (2, 3):
        raise ValueError(f"{path}: expected 2 or 3 columns, got {data.shape[1]}")
    return data
