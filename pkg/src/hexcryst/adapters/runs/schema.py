import hashlib
import json
import math

import numpy as np
from marshmallow import Schema, ValidationError, fields, post_load, validate, validates_schema

from hexcryst.domain.run import SHAPES, DomainConfig, RunConfig


def plain(value):
    """Numpy scalars and arrays as JSON-ready Python values; non-finite floats become None."""
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class Plain(fields.Field):

    def _serialize(self, value, attr, obj, **kwargs):
        return plain(value)

    def _deserialize(self, value, attr, data, **kwargs):
        return value


class EnergyReportSchema(Schema):
    surface = fields.Float()
    transport = fields.Float()
    total = fields.Float()
    V_lambda = fields.Float()
    defect = fields.Float()
    n = fields.Int()


class StabilityReportSchema(Schema):
    defect = fields.Float()
    tau = fields.Float()
    fraction_defective = fields.Float()
    interior_fraction_defective = fields.Float()
    boundary_fraction_defective = fields.Float()
    neighbor_min = fields.Float()
    neighbor_max = fields.Float()
    neighbor_mean = fields.Float()
    max_neighbor_deviation = fields.Float()
    avg_edges = fields.Float()
    euler_bound = fields.Float()
    euler_pass = fields.Bool()
    hexagons = fields.Function(lambda r: int(np.isfinite(r.closeness).sum()))
    max_closeness = fields.Function(
        lambda r: plain(max([c for c in r.closeness if math.isfinite(c)], default=float('nan'))))


class CheckSchema(Schema):
    name = fields.Str()
    passed = fields.Bool()
    computed = Plain()
    expected = Plain()
    deviation = Plain()
    tolerance = Plain()
    detail = fields.Str()


class CertificateReportSchema(Schema):
    passed = fields.Bool()
    checks = fields.List(fields.Nested(CheckSchema))


class RunRecordSchema(Schema):
    command = fields.Str()
    config_hash = fields.Str()
    version = fields.Str()
    run_id = fields.Str(allow_none=True)
    timings = fields.Dict(keys=fields.Str(), values=fields.Float())
    energy = fields.Nested(EnergyReportSchema, allow_none=True)
    stability = fields.Nested(StabilityReportSchema, allow_none=True)
    certificate = fields.Nested(CertificateReportSchema, allow_none=True)
    converged = fields.Bool(allow_none=True)
    iterations = fields.Int(allow_none=True)
    n = fields.Int(allow_none=True)
    files = fields.List(fields.Str())
    extra = Plain()


class StateSchema(Schema):
    """Everything needed to resume a run: the config, the measure and the transport weights."""
    config = fields.Dict(required=True)
    config_hash = fields.Str(required=True)
    points = fields.List(fields.List(fields.Float()), required=True)
    masses = fields.List(fields.Float(), required=True)
    weights = fields.List(fields.Float(), required=True)
    energy = fields.Float(allow_none=True)
    iterations = fields.Int(load_default=0)


class DomainConfigSchema(Schema):
    shape = fields.Str(load_default='square', validate=validate.OneOf(SHAPES))
    sides = fields.Int(allow_none=True, load_default=None, validate=validate.Range(min=3))
    vertices = fields.List(fields.List(fields.Float(), validate=validate.Length(equal=2)),
                           allow_none=True, load_default=None)
    gamma = fields.Float(allow_none=True, load_default=None, validate=validate.Range(min=0, min_inclusive=False))
    k = fields.Int(allow_none=True, load_default=None, validate=validate.Range(min=1))
    m = fields.Int(allow_none=True, load_default=None, validate=validate.Range(min=1))

    @validates_schema
    def check_shape(self, data, **kwargs):
        shape = data.get('shape', 'square')
        if shape == 'regular-k-gon' and data.get('sides') is None:
            raise ValidationError("regular-k-gon needs 'sides'", 'sides')
        if shape == 'polygon' and not data.get('vertices'):
            raise ValidationError("polygon needs 'vertices'", 'vertices')
        if shape == 'commensurate-torus' and data.get('k') is None:
            raise ValidationError("commensurate-torus needs 'k'", 'k')

    @post_load
    def make(self, data, **kwargs):
        return DomainConfig(**data)


class MinimizerOptionsSchema(Schema):
    max_outer_iters = fields.Int(validate=validate.Range(min=0))
    position_tol = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    mass_tol = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    mass_update = fields.Str(validate=validate.OneOf(('projected-gradient', 'fixed-point', 'none')))
    step = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    max_halvings = fields.Int(validate=validate.Range(min=0))
    starts = fields.Int(validate=validate.Range(min=1))
    floor_fraction = fields.Float(validate=validate.Range(min=0, min_inclusive=False, max=1))
    delete_after = fields.Int(validate=validate.Range(min=1))


class RunConfigSchema(Schema):
    """A run configuration file; unknown keys are errors."""
    domain = fields.Nested(DomainConfigSchema, load_default=lambda: DomainConfig())
    lam = fields.Float(data_key='lambda', allow_none=True, load_default=None,
                       validate=validate.Range(min=0, min_inclusive=False))
    v_lambda = fields.Float(allow_none=True, load_default=None, validate=validate.Range(min=0, min_inclusive=False))
    n = fields.Int(allow_none=True, load_default=None, validate=validate.Range(min=1))
    scan = fields.List(fields.Int(validate=validate.Range(min=1)), allow_none=True, load_default=None,
                       validate=validate.Length(equal=2))
    minimizer = fields.Nested(MinimizerOptionsSchema, load_default=dict)
    seed = fields.Int(load_default=0, validate=validate.Range(min=0))
    threads = fields.Int(load_default=1, validate=validate.Range(min=1))
    tol_mass = fields.Float(load_default=1e-8, validate=validate.Range(min=0, max=1e-2, min_inclusive=False))
    tau = fields.Float(load_default=0.05, validate=validate.Range(min=0, min_inclusive=False))

    @validates_schema
    def check_volume(self, data, **kwargs):
        if data.get('lam') is not None and data.get('v_lambda') is not None:
            raise ValidationError("give either 'lambda' or 'v_lambda', not both", 'lambda')
        if data.get('n') is not None and data.get('scan') is not None:
            raise ValidationError("give either 'n' or 'scan', not both", 'scan')

    @post_load
    def make(self, data, **kwargs):
        return RunConfig(**data)


def canonical_hash(payload) -> str:
    """SHA-256 of the canonical JSON form of a payload."""
    canonical = json.dumps(plain(payload), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode()).hexdigest()


def config_hash(config: RunConfig) -> str:
    return canonical_hash(RunConfigSchema().dump(config))
