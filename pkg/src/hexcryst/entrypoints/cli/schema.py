import json
import os
from typing import Any, Dict, Optional

from apispec import APISpec
from apispec.ext.marshmallow import MarshmallowPlugin
from marshmallow import ValidationError

from hexcryst import __version__
from hexcryst.adapters.runs.schema import (
    CertificateReportSchema, CheckSchema, DomainConfigSchema, EnergyReportSchema, MinimizerOptionsSchema,
    RunConfigSchema, RunRecordSchema, StabilityReportSchema, StateSchema)
from hexcryst.domain.errors import ConfigError
from hexcryst.domain.run import SHAPES, DomainConfig, RunConfig
from hexcryst.entrypoints.cli.errors import config_error


def load_config(path: Optional[str]) -> RunConfig:
    """Reads and validates a run config file; no path gives the defaults."""
    if path is None:
        return RunConfigSchema().load({})
    with open(path) as fh:
        text = fh.read()
    source = os.path.basename(path)
    try:
        return RunConfigSchema().load(json.loads(text))
    except (json.JSONDecodeError, ValidationError) as exc:
        raise config_error(source, text, exc) from exc


def parse_domain(value: str) -> DomainConfig:
    """``NAME``, ``NAME:PARAM`` (sides, gamma or ``KxM``) or a path to a JSON vertex list or domain object."""
    name, _, param = value.partition(':')
    if name in SHAPES:
        if not param:
            return DomainConfigSchema().load({'shape': name})
        if name in ('regular-k-gon', 'disk-approx'):
            return DomainConfigSchema().load({'shape': name, 'sides': int(param)})
        if name == 'torus':
            return DomainConfigSchema().load({'shape': name, 'gamma': float(param)})
        if name == 'commensurate-torus':
            k, _, m = param.partition('x')
            return DomainConfigSchema().load({'shape': name, 'k': int(k), 'm': int(m or k)})
        raise ConfigError(f"shape {name!r} takes no parameter")
    if not os.path.exists(value):
        raise ConfigError(f"unknown domain {value!r}: not a shape name or a file")
    with open(value) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
        if isinstance(data, list):
            data = {'shape': 'polygon', 'vertices': data}
        return DomainConfigSchema().load(data)
    except (json.JSONDecodeError, ValidationError) as exc:
        raise config_error(os.path.basename(value), text, exc) from exc


def parse_n(value: str) -> Dict[str, Any]:
    """``INT`` or ``A..B``."""
    lo, sep, hi = value.partition('..')
    try:
        if sep:
            return {'n': None, 'scan': [int(lo), int(hi)]}
        return {'n': int(lo), 'scan': None}
    except ValueError:
        raise ConfigError(f"--n expects INT or A..B, got {value!r}")


def api_spec() -> APISpec:
    """OpenAPI document of every file format the tool reads or writes."""
    spec = APISpec(
        title="hexcryst files",
        version=__version__,
        openapi_version="3.0.3",
        plugins=[MarshmallowPlugin()],
    )
    spec.components.schema('DomainConfig', schema=DomainConfigSchema)
    spec.components.schema('MinimizerOptions', schema=MinimizerOptionsSchema)
    spec.components.schema('RunConfig', schema=RunConfigSchema)
    spec.components.schema('EnergyReport', schema=EnergyReportSchema)
    spec.components.schema('StabilityReport', schema=StabilityReportSchema)
    spec.components.schema('Check', schema=CheckSchema)
    spec.components.schema('CertificateReport', schema=CertificateReportSchema)
    spec.components.schema('RunRecord', schema=RunRecordSchema)
    spec.components.schema('State', schema=StateSchema)
    spec.tag({'name': 'Config', 'description': 'Run configuration files (JSON)'})
    spec.tag({'name': 'Reports', 'description': 'record.json, certificate.json and state.json'})
    return spec
