"""
Binary field dumps and JSON profile files.

Field dump layout (little-endian): magic b"DCPL", version u32, R u64, M u64,
then M*M complex values as pairs of float64, row-major.
"""

import json
import struct
from pathlib import Path

import numpy as np

from decoupling_lab.errors import InvalidInputError
from decoupling_lab.synthesis import (
    FrequencyProfile,
    GridSpec,
    SampledField,
    build_lattice,
)

MAGIC = b"DCPL"
VERSION = 1
HEADER = struct.Struct("<4sIQQ")


def write_field(path: Path, field: SampledField) -> None:
    """Write a sampled field as a binary dump."""
    grid = field.grid
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, VERSION, grid.R, grid.M))
        f.write(np.ascontiguousarray(field.values, dtype="<c16").tobytes())


def read_field(path: Path) -> SampledField:
    """
    Read a binary field dump.

    Raises:
        FileNotFoundError: If the file does not exist
        InvalidInputError: If the header or payload is malformed
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Field file not found: {path}")

    data = path.read_bytes()
    if len(data) < HEADER.size:
        raise InvalidInputError(f"Truncated field header in {path}")
    magic, version, R, M = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise InvalidInputError(f"Bad magic {magic!r} in {path}")
    if version != VERSION:
        raise InvalidInputError(f"Unsupported field version {version} in {path}")
    if R == 0 or M % R != 0:
        raise InvalidInputError(f"Inconsistent grid R={R}, M={M} in {path}")

    payload = data[HEADER.size :]
    expected = M * M * 16
    if len(payload) != expected:
        raise InvalidInputError(
            f"Field payload has {len(payload)} bytes in {path}, expected {expected}"
        )
    values = np.frombuffer(payload, dtype="<c16").reshape(M, M).astype(np.complex128)
    return SampledField(GridSpec(R=int(R), oversampling=int(M // R)), values)


def write_profile(path: Path, profile: FrequencyProfile) -> None:
    """Write the nonzero coefficients of a profile as JSON."""
    nonzero = np.flatnonzero(profile.coeffs)
    entries = [
        [
            int(profile.lattice.j[i]),
            int(profile.lattice.m[i]),
            float(profile.coeffs[i].real),
            float(profile.coeffs[i].imag),
        ]
        for i in nonzero
    ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump({"R": profile.R, "entries": entries}, f)


def read_profile(path: Path) -> FrequencyProfile:
    """
    Read a JSON profile.

    Raises:
        FileNotFoundError: If the file does not exist
        InvalidInputError: If the JSON is malformed or names points off the lattice
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Profile file not found: {path}")

    try:
        with open(path) as f:
            data = json.load(f)
        R = int(data["R"])
        entries = data["entries"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise InvalidInputError(f"Malformed profile {path}: {e}") from e

    lattice = build_lattice(R)
    index = lattice.index_of()
    coeffs = np.zeros(len(lattice), dtype=np.complex128)
    for entry in entries:
        if len(entry) != 4:
            raise InvalidInputError(f"Malformed profile entry {entry!r} in {path}")
        j, m, re, im = entry
        key = (int(j), int(m))
        if key not in index:
            raise InvalidInputError(f"Frequency {key} is outside the lattice for R={R}")
        coeffs[index[key]] += complex(float(re), float(im))
    return FrequencyProfile(lattice, coeffs)
