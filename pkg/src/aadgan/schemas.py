"""JSON schemas for manifests, run configs, and metric reports."""

from __future__ import annotations

import jsonschema

from .errors import InvalidConfig

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["geometry", "samples", "split"],
    "additionalProperties": False,
    "properties": {
        "geometry": {
            "type": "object",
            "required": ["h", "w", "roi_h", "roi_w"],
            "additionalProperties": False,
            "properties": {
                "h": {"type": "integer", "minimum": 1},
                "w": {"type": "integer", "minimum": 1},
                "roi_h": {"type": "integer", "minimum": 1},
                "roi_w": {"type": "integer", "minimum": 1},
            },
        },
        "samples": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "t2w", "adc", "t1pre", "early", "late"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "t2w": {"type": "string"},
                    "adc": {"type": "string"},
                    "t1pre": {"type": "string"},
                    "early": {"type": "string"},
                    "late": {"type": "string"},
                    "roi": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 0},
                        "minItems": 4,
                        "maxItems": 4,
                    },
                    "lesion_mask": {"type": "string"},
                },
            },
        },
        "split": {"type": "string", "enum": ["train", "val"]},
    },
}

_GENERATOR_SCHEMA = {
    "type": "object",
    "required": ["arch"],
    "additionalProperties": False,
    "properties": {
        "arch": {"type": "string", "enum": ["resnet_encdec", "unet"]},
        "in_channels": {"type": "integer", "minimum": 1},
        "out_channels": {"type": "integer", "minimum": 1},
        "base_width": {"type": "integer", "minimum": 1},
        "depth": {"type": "integer", "minimum": 1},
        "n_res_blocks": {"type": "integer", "minimum": 0},
    },
}

_AD_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "in_channels": {"type": "integer", "minimum": 1},
        "n_c": {"type": "integer", "minimum": 1},
        "trunk_widths": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 1,
        },
        "att_depth": {"type": "integer", "minimum": 1},
    },
}

_ENSEMBLE = {"type": "string", "enum": ["global_only", "multiply", "add", "embed"]}
_ADC = {"type": "string", "enum": ["on", "off"]}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "required": [
        "train_manifest",
        "phase",
        "lr",
        "beta1",
        "beta2",
        "epochs",
        "batch_size",
        "lambda_l1",
        "ensemble",
        "seed",
        "generator",
        "ad",
    ],
    "additionalProperties": False,
    "properties": {
        "train_manifest": {"type": "string"},
        "val_manifest": {"type": "string"},
        "out": {"type": "string"},
        "phase": {"type": "string", "enum": ["early", "late"]},
        "lr": {"type": "number", "exclusiveMinimum": 0},
        "beta1": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "beta2": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "epochs": {"type": "integer", "minimum": 1},
        "batch_size": {"type": "integer", "minimum": 1},
        "lambda_l1": {"type": "number", "minimum": 0},
        "ensemble": _ENSEMBLE,
        "seed": {"type": "integer", "minimum": 0},
        "adc": _ADC,
        "infer_refinements": {"type": "integer", "minimum": 0},
        "checkpoint_every": {"type": "integer", "minimum": 0},
        "generator": _GENERATOR_SCHEMA,
        "ad": _AD_SCHEMA,
        "ablate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ensembles": {"type": "array", "items": _ENSEMBLE, "minItems": 1},
                "adc": {"type": "array", "items": _ADC, "minItems": 1},
                "generators": {
                    "type": "array",
                    "items": {"type": "string", "enum": ["resnet_encdec", "unet"]},
                    "minItems": 1,
                },
                "seeds": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 0},
                    "minItems": 1,
                },
            },
        },
    },
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["phase", "n", "psnr", "ssim", "mae", "per_sample", "config"],
    "properties": {
        "phase": {"type": "string", "enum": ["early", "late"]},
        "n": {"type": "integer", "minimum": 0},
        "psnr": {
            "type": "object",
            "required": ["mean", "std", "inf_count"],
            "properties": {
                "mean": {"type": ["number", "null"]},
                "std": {"type": ["number", "null"]},
                "inf_count": {"type": "integer", "minimum": 0},
            },
        },
        "ssim": {
            "type": "object",
            "required": ["mean", "std"],
            "properties": {
                "mean": {"type": ["number", "null"]},
                "std": {"type": ["number", "null"]},
            },
        },
        "mae": {
            "type": "object",
            "required": ["mean", "std"],
            "properties": {
                "mean": {"type": ["number", "null"]},
                "std": {"type": ["number", "null"]},
            },
        },
        "per_sample": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "psnr", "ssim", "mae"],
                "properties": {
                    "id": {"type": "string"},
                    "psnr": {"type": ["number", "null"]},
                    "ssim": {"type": "number"},
                    "mae": {"type": "number"},
                },
            },
        },
        "config": {"type": "object"},
    },
}


def _validate(doc, schema, what: str) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise InvalidConfig(f"{what} invalid at {path}: {e.message}") from e


def validate_manifest(doc) -> None:
    _validate(doc, MANIFEST_SCHEMA, "manifest")


def validate_run_config(doc) -> None:
    _validate(doc, RUN_CONFIG_SCHEMA, "run config")


def validate_report(doc) -> None:
    _validate(doc, REPORT_SCHEMA, "report")
