"""JSON factor files.

    {"field": "real" | "complex", "sfs": bool, "A": [[...]], "B": [[...]], "C": [[...]]}

Matrices are row-major nested lists; complex entries are [re, im] pairs; B is
omitted for SFS files.
"""
import json
import logging
from pathlib import Path
from typing import Any, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from .exceptions import FactorFileError, TenuniqError
from .field_linalg import ScalarField, decode_entries, encode_entries
from .tensor3 import FactorSet

logger = logging.getLogger(__name__)


class FactorFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    field: ScalarField = ScalarField.REAL
    sfs: bool = False
    A: List[Any]
    B: Optional[List[Any]] = None
    C: List[Any]

    @model_validator(mode="after")
    def _b_present(self) -> "FactorFile":
        if not self.sfs and self.B is None:
            raise ValueError("B is required unless sfs is true")
        return self

    def to_factor_set(self) -> FactorSet:
        try:
            A = decode_entries(self.A, self.field)
            C = decode_entries(self.C, self.field)
            if self.sfs:
                if self.B is not None and not np.array_equal(decode_entries(self.B, self.field), A):
                    raise FactorFileError("sfs file has a B that differs from A")
                return FactorSet.symmetric(A, C)
            return FactorSet(A, decode_entries(self.B, self.field), C)
        except FactorFileError:
            raise
        except (TenuniqError, ValueError) as e:
            raise FactorFileError(f"Inconsistent factor matrices: {e}") from e

    @classmethod
    def from_factor_set(cls, f: FactorSet) -> "FactorFile":
        return cls(
            field=f.field,
            sfs=f.sfs,
            A=encode_entries(f.A),
            B=None if f.sfs else encode_entries(f.B),
            C=encode_entries(f.C),
        )


def read_factor_file(text: str) -> FactorSet:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise FactorFileError(f"Factor file is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise FactorFileError("Factor file must hold a JSON object")
    try:
        document = FactorFile(**data)
    except ValidationError as e:
        raise FactorFileError(f"Malformed factor file: {e}") from e
    return document.to_factor_set()


def load_factor_file(path: Union[str, Path]) -> FactorSet:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise FactorFileError(f"Cannot read factor file {path}: {e}") from e
    f = read_factor_file(text)
    logger.info(f"Loaded factor file {path}: dims {f.dims}, R={f.rank}, field {f.field.value}, sfs={f.sfs}")
    return f


def dump_factor_file(f: FactorSet) -> str:
    return json.dumps(FactorFile.from_factor_set(f).model_dump(mode="json", exclude_none=True), sort_keys=True)


def write_factor_file(f: FactorSet, path: Union[str, Path]) -> None:
    Path(path).write_text(dump_factor_file(f) + "\n")
