"""
Block subalgebras of ``M_d``, increasing towers of them, and their
trace-preserving conditional expectations.

A :class:`SubalgebraSpec` partitions ``{0, ..., d-1}`` into blocks.  A FULL
block ``B`` contributes the whole matrix algebra on ``B x B``; a SCALAR block
contributes only multiples of the identity on ``B``.  Singleton blocks are
stored as SCALAR since the two tags coincide there.
"""
import json
from dataclasses import dataclass

import numpy as np

from ._fmt import dumps17
from .algebra import PositiveOperator, as_array
from .errors import BadDimension, BadPartition, DimensionMismatch, NotIncreasing

FULL = "FULL"
SCALAR = "SCALAR"


@dataclass(frozen=True)
class SubalgebraSpec:
    dim: int
    blocks: tuple
    tags: tuple

    def __post_init__(self):
        if self.dim < 1:
            raise BadPartition("dim must be positive")
        if len(self.blocks) != len(self.tags):
            raise BadPartition("one tag per block is required")
        pairs = []
        seen = []
        for block, tag in zip(self.blocks, self.tags):
            block = tuple(sorted(int(i) for i in block))
            if not block:
                raise BadPartition("empty block")
            if tag not in (FULL, SCALAR):
                raise BadPartition(f"unknown tag {tag!r}")
            if len(block) == 1:
                tag = SCALAR
            seen.extend(block)
            pairs.append((block, tag))
        if sorted(seen) != list(range(self.dim)):
            raise BadPartition(f"blocks do not partition range({self.dim})")
        pairs.sort(key=lambda bt: bt[0][0])
        object.__setattr__(self, "blocks", tuple(b for b, _ in pairs))
        object.__setattr__(self, "tags", tuple(t for _, t in pairs))

    @classmethod
    def from_blocks(cls, blocks, tags=None, dim=None):
        blocks = [tuple(b) for b in blocks]
        if dim is None:
            dim = sum(len(b) for b in blocks)
        if tags is None:
            tags = [FULL] * len(blocks)
        elif isinstance(tags, str):
            tags = [tags] * len(blocks)
        return cls(dim, tuple(blocks), tuple(tags))

    @classmethod
    def full(cls, dim):
        return cls(dim, (tuple(range(dim)),), (FULL,))

    @classmethod
    def trivial(cls, dim):
        """Scalars only: ``E(x) = tau(x) * 1``."""
        return cls(dim, (tuple(range(dim)),), (SCALAR,))

    @classmethod
    def diagonal(cls, dim):
        return cls(dim, tuple((i,) for i in range(dim)), (SCALAR,) * dim)

    def items(self):
        return zip(self.blocks, self.tags)

    def to_dict(self):
        return {"blocks": [list(b) for b in self.blocks], "tags": list(self.tags)}

    @classmethod
    def from_dict(cls, obj, dim=None):
        blocks = [tuple(b) for b in obj["blocks"]]
        return cls.from_blocks(blocks, obj["tags"], dim)

    def contains(self, y, tol=1e-10):
        """Whether ``y`` lies in the subalgebra (up to ``tol``)."""
        y = as_array(y)
        return bool(np.max(np.abs(cond_exp(self, y) - y), initial=0.0) <= tol * (1.0 + np.max(np.abs(y))))

    def random_element(self, rng):
        """Random (non-Hermitian) element of the subalgebra."""
        y = np.zeros((self.dim, self.dim), dtype=complex)
        for block, tag in self.items():
            ix = np.ix_(block, block)
            if tag == FULL:
                z = rng.standard_normal((len(block), len(block), 2))
                y[ix] = z[..., 0] + 1j * z[..., 1]
            else:
                c = rng.standard_normal(2)
                y[ix] = (c[0] + 1j * c[1]) * np.eye(len(block))
        return y


def cond_exp(spec, x):
    """Trace-preserving conditional expectation onto ``spec``.

    Entries linking distinct blocks are dropped, FULL blocks are kept and each
    SCALAR block ``B`` is replaced by ``(Tr(x|_B) / |B|) * 1_B``.  Works for
    arbitrary (not necessarily Hermitian) ``x``.
    """
    x = as_array(x)
    if x.shape != (spec.dim, spec.dim):
        raise DimensionMismatch(f"spec has dim {spec.dim}, matrix has shape {x.shape}")
    out = np.zeros_like(x)
    for block, tag in spec.items():
        if tag == FULL:
            ix = np.ix_(block, block)
            out[ix] = x[ix]
        else:
            idx = list(block)
            out[idx, idx] = np.mean(x[idx, idx])
    return out


def _is_union_of(block, spec_next):
    block = set(block)
    for other in spec_next.blocks:
        inter = block.intersection(other)
        if inter and len(inter) != len(other):
            return False
    return True


def _inside_full(block, spec_next):
    block = set(block)
    return any(tag == FULL and block <= set(b) for b, tag in spec_next.items())


def _contained(spec, spec_next):
    """Reason string if ``spec`` is not a subalgebra of ``spec_next``."""
    for block, tag in spec.items():
        if tag == FULL:
            if not _inside_full(block, spec_next):
                return f"FULL block {list(block)} is not inside a FULL block"
        elif not (_is_union_of(block, spec_next) or _inside_full(block, spec_next)):
            return f"SCALAR block {list(block)} is neither a union of blocks nor inside a FULL block"
    return None


@dataclass(frozen=True)
class Tower:
    """Validated increasing sequence ``M_1 <= M_2 <= ... <= M_n``.

    Indexing is zero-based: ``tower.cond_exp(k, x)`` applies the expectation
    onto ``specs[k]``.
    """

    specs: tuple

    @property
    def dim(self):
        return self.specs[0].dim

    def __len__(self):
        return len(self.specs)

    def __getitem__(self, k):
        return self.specs[k]

    def __iter__(self):
        return iter(self.specs)

    def cond_exp(self, k, x):
        return cond_exp(self.specs[k], x)

    def to_list(self):
        return [s.to_dict() for s in self.specs]

    def dumps(self):
        return dumps17(self.to_list())


def validate_tower(specs):
    """Check the increasing property and return a :class:`Tower`.

    Raises :class:`NotIncreasing` naming the first spec that does not contain
    its predecessor, or :class:`BadPartition` on malformed input.
    """
    specs = tuple(specs)
    if not specs:
        raise BadPartition("a tower needs at least one subalgebra")
    parsed = []
    for s in specs:
        if isinstance(s, dict):
            s = SubalgebraSpec.from_dict(s)
        if not isinstance(s, SubalgebraSpec):
            raise BadPartition(f"not a subalgebra spec: {s!r}")
        parsed.append(s)
    dim = parsed[0].dim
    if any(s.dim != dim for s in parsed):
        raise BadPartition("all specs of a tower must share one dimension")
    for k in range(1, len(parsed)):
        reason = _contained(parsed[k - 1], parsed[k])
        if reason:
            raise NotIncreasing(k, reason)
    return Tower(tuple(parsed))


def loads_tower(text):
    return validate_tower(json.loads(text))


def dumps_tower(tower):
    return tower.dumps()


# -- presets -------------------------------------------------------------------

def dyadic_chain(dim):
    levels = dim.bit_length() - 1
    if dim < 1 or 2 ** levels != dim:
        raise BadDimension(f"dyadic filtration needs a power-of-two dim, got {dim}")
    chain = []
    for j in range(levels + 1):
        size = dim >> j
        blocks = tuple(tuple(range(i * size, (i + 1) * size)) for i in range(2 ** j))
        chain.append(SubalgebraSpec(dim, blocks, (SCALAR,) * len(blocks)))
    return chain


def preset_tower(kind, dim, levels=None, block_sizes=None, specs=None):
    """Canonical towers.

    ``dyadic_scalar``
        Classical dyadic filtration on the diagonal: SCALAR blocks halving each
        step, ``levels + 1`` specs, requires ``dim == 2**levels``.
    ``pinch_coarsen``
        ``block_sizes`` is a list of partitions (lists of contiguous block
        sizes), each turned into FULL blocks; e.g. ``[[1, 1], [2]]``.
    ``custom``
        ``specs`` are validated as given.
    """
    if kind == "dyadic_scalar":
        if levels is None:
            levels = dim.bit_length() - 1
        if dim != 2 ** levels:
            raise BadDimension(f"dyadic_scalar with {levels} levels needs dim {2 ** levels}, got {dim}")
        return validate_tower(dyadic_chain(dim))
    if kind == "pinch_coarsen":
        if not block_sizes:
            raise BadDimension("pinch_coarsen needs block_sizes")
        chain = []
        for sizes in block_sizes:
            if sum(sizes) != dim:
                raise BadDimension(f"block sizes {sizes} do not sum to {dim}")
            start, blocks = 0, []
            for s in sizes:
                blocks.append(tuple(range(start, start + s)))
                start += s
            chain.append(SubalgebraSpec(dim, tuple(blocks), (FULL,) * len(blocks)))
        return validate_tower(chain)
    if kind == "custom":
        tower = validate_tower(specs)
        if tower.dim != dim:
            raise BadDimension(f"custom specs have dim {tower.dim}, expected {dim}")
        return tower
    raise ValueError(f"unknown tower kind {kind!r}")


def _select(chain, n, rng):
    idx = np.sort(rng.integers(0, len(chain), size=n))
    return [chain[i] for i in idx]


def _random_scalar_chain(dim, rng):
    perm = [int(i) for i in rng.permutation(dim)]
    blocks = [perm]
    chain = [SubalgebraSpec(dim, (tuple(perm),), (SCALAR,))]
    while any(len(b) > 1 for b in blocks):
        splittable = [i for i, b in enumerate(blocks) if len(b) > 1]
        i = splittable[rng.integers(len(splittable))]
        b = blocks.pop(i)
        cut = int(rng.integers(1, len(b)))
        blocks[i:i] = [b[:cut], b[cut:]]
        chain.append(SubalgebraSpec(dim, tuple(map(tuple, blocks)), (SCALAR,) * len(blocks)))
    return chain


def _coarsen_chain(dim, rng):
    perm = [int(i) for i in rng.permutation(dim)]
    blocks = [[i] for i in perm]
    chain = [SubalgebraSpec(dim, tuple(map(tuple, blocks)), (FULL,) * dim)]
    while len(blocks) > 1:
        i = int(rng.integers(len(blocks) - 1))
        blocks[i:i + 2] = [blocks[i] + blocks[i + 1]]
        chain.append(SubalgebraSpec(dim, tuple(map(tuple, blocks)), (FULL,) * len(blocks)))
    return chain


def _mixed_chain(dim, n, rng):
    """Random walk of algebra-enlarging moves: split a SCALAR block, promote a
    SCALAR block to FULL, or merge a block into a FULL neighbour."""
    blocks = [[int(i) for i in rng.permutation(dim)]]
    tags = [SCALAR]

    def spec():
        return SubalgebraSpec(dim, tuple(map(tuple, blocks)), tuple(tags))

    chain = [spec()]
    for _ in range(n - 1):
        moves = []
        for i, (b, t) in enumerate(zip(blocks, tags)):
            if t == SCALAR and len(b) > 1:
                moves += [("split", i), ("promote", i)]
            if i + 1 < len(blocks) and FULL in (t, tags[i + 1]):
                moves.append(("merge", i))
        if moves and rng.random() < 0.9:
            move, i = moves[rng.integers(len(moves))]
            if move == "split":
                b = blocks.pop(i)
                cut = int(rng.integers(1, len(b)))
                blocks[i:i] = [b[:cut], b[cut:]]
                tags[i:i + 1] = [SCALAR, SCALAR]
            elif move == "promote":
                tags[i] = FULL
            else:
                blocks[i:i + 2] = [blocks[i] + blocks[i + 1]]
                tags[i:i + 2] = [FULL]
        chain.append(spec())
    return chain


TOWER_KINDS = ("dyadic_scalar", "pinch_coarsen", "mixed")
TOWER_WEIGHTS = (0.4, 0.4, 0.2)


def random_tower(dim, n, rng, kind=None, kinds=TOWER_KINDS):
    """Random increasing tower of length ``n``.

    If ``kind`` is None it is drawn from ``kinds`` with the preset weights
    (renormalized to the allowed kinds).  Returns ``(kind, tower)``.
    """
    if kind is None:
        w = np.array([TOWER_WEIGHTS[TOWER_KINDS.index(k)] for k in kinds])
        kind = kinds[rng.choice(len(kinds), p=w / w.sum())]
    if kind == "dyadic_scalar":
        if dim & (dim - 1) == 0:
            chain = dyadic_chain(dim)
        else:
            chain = _random_scalar_chain(dim, rng)
        specs = _select(chain, n, rng)
    elif kind == "pinch_coarsen":
        specs = _select(_coarsen_chain(dim, rng), n, rng)
    elif kind == "mixed":
        specs = _mixed_chain(dim, n, rng)
    else:
        raise ValueError(f"unknown tower kind {kind!r}")
    return kind, validate_tower(specs)


# -- operator sequences --------------------------------------------------------

@dataclass(frozen=True)
class OperatorSequence:
    xs: tuple

    def __post_init__(self):
        xs = tuple(x if isinstance(x, PositiveOperator) else PositiveOperator(x) for x in self.xs)
        if not xs:
            raise ValueError("empty operator sequence")
        if len({x.dim for x in xs}) != 1:
            raise DimensionMismatch("operators of different dimensions")
        object.__setattr__(self, "xs", xs)

    @property
    def dim(self):
        return self.xs[0].dim

    def __len__(self):
        return len(self.xs)

    def __iter__(self):
        return iter(self.xs)

    def __getitem__(self, k):
        return self.xs[k]
