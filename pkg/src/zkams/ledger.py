"""Deterministic settlement ledger with symbolic gas.

Two contracts share one state: the verifier registers a proven batch of
(hash_phc, pk_seed) pairs, and the soul registry binds a fresh account
address to a key image after checking a linkable ring signature over
registered seed keys. Gas is looked up in a cost table, never executed.
Cost formulas return exact Fractions so that capacity * cost == budget.
"""

import json
from dataclasses import dataclass, field, fields
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .encoding import digest
from .errors import InvalidBatchSize, InvalidParams
from .mlsags import lrs_verify
from .nifs import x_digest

VERIFICATION_FAILED = "Verification failed"
ALREADY_REGISTERED = "Already registered"
RING_INVALID = "The ring of public keys is invalid"
ALREADY_PROVISIONED = "Already provisioned"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class GasModel:
    C_verifyFolded: int = 577_720
    C_overhead: int = 0
    C_stateUpdate: int = 0
    C_MLSAGS_base: int = 37_903
    C_MLSAGS_per_member: int = 57_000
    ring_size: int = 11
    C_verify: int = 435_150
    C_store: int = 0
    block_gas_budget: int = 30_000_000
    block_period_seconds: int = 12
    signing_ms_ref: float = 184.23
    signing_ms_ref_ring: int = 11
    signing_ms_per_member: float = 40.0
    T_sub_blocks: int = 10

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise InvalidParams(f"{f.name} must be nonnegative")
        if self.block_gas_budget <= 0 or self.block_period_seconds <= 0:
            raise InvalidParams("block budget and period must be positive")


def parse_profile(text):
    types = {f.name: f.type for f in fields(GasModel)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = (s.strip() for s in line.partition("="))
        if not sep or key not in types:
            raise InvalidParams(f"profile line {lineno}: unknown or malformed entry {raw.strip()!r}")
        try:
            values[key] = float(val) if types[key] in (float, "float") else int(val.replace("_", ""))
        except ValueError as exc:
            raise InvalidParams(f"profile line {lineno}: bad value for {key}") from exc
    return GasModel(**values)


def load_profile(path=None):
    """Read a flat key = value profile; without a path, the bundled testnet profile."""
    if path is None:
        text = resources.files("zkams").joinpath("profiles/paper-testnet.cfg").read_text()
    else:
        text = Path(path).read_text()
    return parse_profile(text)


# ---------------------------------------------------------------- cost model

def mlsags_gas(L, model=GasModel()):
    if L < 1:
        raise InvalidParams("ring size must be at least 1")
    return model.C_MLSAGS_base + L * model.C_MLSAGS_per_member


def signing_ms(L, model=GasModel()):
    """Linear signing-time model anchored at the reference ring size, floored at zero."""
    return max(0.0, model.signing_ms_ref + model.signing_ms_per_member * (L - model.signing_ms_ref_ring))


def baseline_cost(N, model=GasModel()):
    if N < 0:
        raise InvalidBatchSize("N must be nonnegative")
    return N * (model.C_verify + model.C_store)


def settlement_gas(N, model=GasModel()):
    """Chain gas for one accepted batch of N users."""
    return model.C_verifyFolded + model.C_overhead + N * model.C_stateUpdate


def amortized_cost(N, model=GasModel()):
    """Per-user chain gas: settlement shared over N plus one provisioning."""
    if N < 1:
        raise InvalidBatchSize("batch size must be at least 1")
    return (Fraction(model.C_verifyFolded + model.C_overhead, N) + model.C_stateUpdate
            + mlsags_gas(model.ring_size, model))


def amortized_limit(model=GasModel()):
    return Fraction(model.C_stateUpdate + mlsags_gas(model.ring_size, model))


def capacity(N, model=GasModel()):
    """(users per block, users per second)."""
    per_block = Fraction(model.block_gas_budget) / amortized_cost(N, model)
    return per_block, per_block / model.block_period_seconds


# ---------------------------------------------------------------- state machine

@dataclass
class LedgerState:
    phc_registry: dict = field(default_factory=dict)  # hash_phc -> pk_seed
    soul_registry: dict = field(default_factory=dict)  # key image -> soul address
    gas_used: int = 0
    block_height: int = 0
    block_gas: int = 0

    def to_bytes(self):
        body = {
            "version": SNAPSHOT_VERSION,
            "block_height": self.block_height,
            "block_gas": self.block_gas,
            "gas_used": self.gas_used,
            "phc_registry": [[str(h), pk.hex()] for h, pk in sorted(self.phc_registry.items())],
            "soul_registry": [[y.hex(), a] for y, a in sorted(self.soul_registry.items())],
        }
        return json.dumps(body, sort_keys=True, separators=(",", ":")).encode()


@dataclass(frozen=True)
class Receipt:
    kind: str
    ok: bool
    reason: str
    gas: int
    block: int


def soul_message(addr_soul):
    """The message a user signs to bind ``addr_soul``."""
    return digest("zkams/soul-binding", addr_soul.encode())


class Ledger:
    """Verifier and soul-registry contracts over one serialized transaction stream."""

    def __init__(self, model, proof_system, vk=None):
        self.model = model
        self.proof_system = proof_system
        self.vk = vk if vk is not None else proof_system.vk
        self.state = LedgerState()
        self.log = []

    # blocks
    def tick(self, blocks=1):
        self.state.block_height += blocks
        self.state.block_gas = 0

    @property
    def time_seconds(self):
        return self.state.block_height * self.model.block_period_seconds

    def _charge(self, gas):
        if self.state.block_gas and self.state.block_gas + gas > self.model.block_gas_budget:
            self.tick()
        self.state.block_gas += gas
        self.state.gas_used += gas
        return self.state.block_height

    def _record(self, kind, ok, reason, gas, **extra):
        block = self._charge(gas)
        receipt = Receipt(kind, ok, reason, gas, block)
        self.log.append(dict(extra, seq=len(self.log), kind=kind, ok=ok, reason=reason, gas=gas, block=block))
        return receipt

    # verifier contract
    def _binding_ok(self, submission):
        ctx = submission.statement.ctx
        return ctx.vk == self.vk and digest("zkams/ctx-binding", self.vk, x_digest(submission.X)) == ctx.binding

    def verifier_submit(self, submission):
        X = [(int(h), bytes(pk)) for h, pk in submission.X]
        info = {"X_digest": x_digest(X).hex() if X else "", "statement": submission.statement.digest.hex(), "N": len(X)}
        verify_gas = self.model.C_verifyFolded + self.model.C_overhead
        if not X or not self._binding_ok(submission) or \
                not self.proof_system.verify(submission.statement, submission.proof):
            return self._record("batch", False, VERIFICATION_FAILED, verify_gas, **info)
        hashes = [h for h, _ in X]
        if len(set(hashes)) != len(hashes) or any(h in self.state.phc_registry for h in hashes):
            return self._record("batch", False, ALREADY_REGISTERED, verify_gas, **info)
        for h, pk in X:
            self.state.phc_registry[h] = pk
        return self._record("batch", True, "", settlement_gas(len(X), self.model), **info)

    # soul registry contract
    def soul_register(self, sig, ring, addr_soul):
        ring = [bytes(pk) for pk in ring]
        gas = mlsags_gas(max(1, len(ring)), self.model)
        info = {"y0": sig.y0.hex(), "addr": addr_soul, "L": len(ring)}
        registered = set(self.state.phc_registry.values())
        if not ring or any(pk not in registered for pk in ring):
            return self._record("soul", False, RING_INVALID, gas, **info)
        if not lrs_verify(soul_message(addr_soul), ring, sig):
            return self._record("soul", False, VERIFICATION_FAILED, gas, **info)
        if sig.y0 in self.state.soul_registry:
            return self._record("soul", False, ALREADY_PROVISIONED, gas, **info)
        self.state.soul_registry[sig.y0] = addr_soul
        return self._record("soul", True, "", gas, **info)

    # export
    def snapshot(self):
        return self.state.to_bytes()

    def tx_log_lines(self):
        return "".join(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n" for rec in self.log)


# ---------------------------------------------------------------- curves

def cost_rows(n_values, model=GasModel()):
    """(N, C_total_baseline, C_user, cap_per_block, cap_per_second) per N."""
    rows = []
    for N in n_values:
        per_block, per_second = capacity(N, model)
        rows.append((N, baseline_cost(N, model), amortized_cost(N, model), per_block, per_second))
    return rows


def ring_rows(l_values, model=GasModel()):
    """(L, signing_ms_model, verify_gas_model) per ring size."""
    return [(L, signing_ms(L, model), mlsags_gas(L, model)) for L in l_values]
