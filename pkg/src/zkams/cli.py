"""Scenario runner and cost-curve emitter.

``zkams run`` drives one admission round end to end: client credential
generation, the encrypted fold of the batch, PBS finalization, settlement on
the ledger and soul-account provisioning. ``zkams costs`` writes the gas and
capacity curves of the active profile as CSV.
"""

import argparse
import csv
import functools
import json
import logging
import random
import sys
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .algebra import DEFAULT_PARAMS
from .commit import commit
from .encoding import digest
from .errors import InvalidParams
from .ledger import GasModel, Ledger, amortized_cost, cost_rows, load_profile, ring_rows, soul_message
from .mkhe import get_backend
from .mlsags import lrs_keygen, lrs_sign, sample_ring
from .pbs import PendingBatch, TransparentProofSystem, finalize_batch, requeue_expired
from .pipeline import admit_batch, make_member
from .relation import build_phc_relation, client_generate, commit_setup_for, honest_client, phc_assignment
from .store import ContentStore

log = logging.getLogger("zkams")

FAULT_KINDS = ("bad_witness", "withhold_share", "duplicate_phc", "double_bind", "stall_pbs")
COST_HEADER = ("N", "C_total_baseline", "C_user", "cap_per_block", "cap_per_second")
RING_HEADER = ("L", "signing_ms_model", "verify_gas_model")


@dataclass(frozen=True)
class Fault:
    kind: str
    user: int = -1


@dataclass(frozen=True)
class Scenario:
    N: int = 4
    L: int = 11
    backend: str = "transparent"
    seed: int = 1
    faults: tuple = ()
    model: GasModel = GasModel()
    chain_id: int = 1

    def __post_init__(self):
        if self.N < 1 or self.L < 1:
            raise InvalidParams("N and L must be positive")
        for f in self.faults:
            if f.kind not in FAULT_KINDS:
                raise InvalidParams(f"unknown fault kind {f.kind!r}")
            if f.kind != "stall_pbs" and not 0 <= f.user < self.N:
                raise InvalidParams(f"fault {f.kind} names user {f.user} outside 0..{self.N - 1}")

    def faulty_users(self):
        return {f.user for f in self.faults if f.user >= 0}

    def has(self, kind, user=None):
        return any(f.kind == kind and (user is None or f.user == user) for f in self.faults)


@dataclass
class RunMetrics:
    timings: dict = field(default_factory=dict)
    fold_step_seconds: list = field(default_factory=list)
    settlement_gas: list = field(default_factory=list)
    provisioning_gas: dict = field(default_factory=dict)
    amortized_gas: Fraction = Fraction(0)
    realized_gas_per_user: Fraction = Fraction(0)
    outcomes: dict = field(default_factory=dict)
    rejects: list = field(default_factory=list)
    transcript_digests: list = field(default_factory=list)
    snapshot: bytes = b""
    tx_log: str = ""
    ok: bool = False

    @property
    def admitted(self):
        return sorted(u for u, o in self.outcomes.items() if o["admitted"])

    @property
    def provisioned(self):
        return sorted(u for u, o in self.outcomes.items() if o["provisioned"])

    def records(self):
        """Line-delimited metric records; timings are the only nondeterministic fields."""
        yield {"record": "timings", **{k: round(v, 6) for k, v in self.timings.items()},
               "fold_steps": [round(s, 6) for s in self.fold_step_seconds]}
        for user, o in sorted(self.outcomes.items()):
            yield {"record": "user", "user": user, **o}
        for kind, reason in self.rejects:
            yield {"record": "reject", "kind": kind, "reason": reason}
        yield {"record": "gas", "settlement": self.settlement_gas, "provisioning": self.provisioning_gas,
               "amortized_model": str(self.amortized_gas), "realized_per_user": str(self.realized_gas_per_user)}
        yield {"record": "digests", "transcripts": self.transcript_digests,
               "snapshot": digest("zkams/snapshot", self.snapshot).hex()}


@functools.lru_cache(maxsize=4)
def _relation(algebra=DEFAULT_PARAMS):
    shape = build_phc_relation(algebra)
    return shape, commit_setup_for(shape, algebra=algebra)


@dataclass
class _User:
    name: str
    client: object
    seed_key: object
    instance: object
    witness: object
    withhold: bool = False

    @property
    def credential(self):
        return self.client.phc.hash(DEFAULT_PARAMS.p), self.seed_key.pk


def _corrupt(setup, inst, wit, index=5):
    W = list(wit.W)
    W[index] = (W[index] + 1) % DEFAULT_PARAMS.p
    return replace(inst, W_bar=commit(setup.W, W, wit.r_W)), replace(wit, W=tuple(W))


def _new_user(name, shape, setup, rng):
    c = honest_client(shape, setup, rng)
    return _User(name, c, lrs_keygen(rng), c.instance, c.witness)


class _Round:
    """Shared state of one scenario run."""

    def __init__(self, scenario, store):
        self.sc = scenario
        self.rng = random.Random(scenario.seed)
        self.shape, self.setup = _relation()
        self.backend = get_backend(scenario.backend)
        self.proofs = TransparentProofSystem(self.shape, self.setup)
        self.ledger = Ledger(scenario.model, self.proofs)
        self.store = store
        self.metrics = RunMetrics()
        self.pending = []

    def timed(self, key, fn, *args):
        t0 = time.perf_counter()
        out = fn(*args)
        self.metrics.timings[key] = self.metrics.timings.get(key, 0.0) + time.perf_counter() - t0
        return out

    def settle(self, users, batch_id):
        """Fold, finalize and submit one batch; returns (admitted users, excluded users)."""
        members = []
        for u in users:
            m = make_member(self.backend, u.name, u.instance, u.witness, u.credential, self.rng)
            m.withhold = u.withhold
            members.append(m)
        run, faulty = self.timed("fold_and_fuse", admit_batch, self.backend, self.shape, self.setup, members,
                                 batch_id, self.rng, self.store, self.sc.chain_id)
        excluded = {m.party_id for m in faulty}
        if run is None:
            return [], [u for u in users if u.name in excluded]
        self.metrics.transcript_digests.append(run.accumulator.transcript.digest.hex())
        self.pending.append(PendingBatch(batch_id, [u.name for u in users], self.ledger.state.block_height))
        if self.sc.has("stall_pbs") and batch_id.endswith(b"main"):
            # the first submitter never finalizes; after T_sub blocks the users are re-queued
            self.ledger.tick(self.sc.model.T_sub_blocks)
            self.pending, requeued = requeue_expired(self.pending, self.ledger.state.block_height,
                                                     self.sc.model.T_sub_blocks)
            log.info("batch %s expired; re-queuing %d users", batch_id.decode(), len(requeued))
            return self.settle([u for u in users if u.name in requeued], batch_id + b"/requeue")
        sub = self.timed("finalize", finalize_batch, self.shape, self.setup, run.batch, run.ctx, run.X, self.proofs)
        receipt = self.timed("settle", self.ledger.verifier_submit, sub)
        self.pending[-1].finalized = True
        self.ledger.tick()
        if not receipt.ok:
            self.metrics.rejects.append(("batch", receipt.reason))
            return [], [u for u in users if u.name in excluded]
        self.metrics.settlement_gas.append(receipt.gas)
        admitted = {m.party_id for m in run.members}
        return [u for u in users if u.name in admitted], [u for u in users if u.name in excluded]

    def provision(self, user, addr):
        pks = list(self.ledger.state.phc_registry.values())
        ring, idx = sample_ring(pks, user.seed_key.pk, self.sc.L, self.rng)
        sig = self.timed("sign", lrs_sign, soul_message(addr), ring, idx, user.seed_key.sk, self.rng)
        return self.timed("provision", self.ledger.soul_register, sig, ring, addr)


def _soul_address(user, k=0):
    return "soul:" + digest("zkams/soul-address", user.seed_key.pk, k.to_bytes(4, "little")).hex()[:40]


def run_scenario(scenario, store=None):
    """Run one admission round and return its metrics."""
    rd = _Round(scenario, store if store is not None else ContentStore())
    sc, m = scenario, rd.metrics
    t0 = time.perf_counter()

    users = [_new_user(f"u{i}", rd.shape, rd.setup, rd.rng) for i in range(sc.N)]
    for i, u in enumerate(users):
        if sc.has("bad_witness", i):
            u.instance, u.witness = _corrupt(rd.setup, u.instance, u.witness)
        u.withhold = sc.has("withhold_share", i)
    m.timings["client_generate"] = time.perf_counter() - t0
    for u in users:
        m.outcomes[u.name] = {"admitted": False, "provisioned": False, "reason": ""}

    # rings need L registered keys; an earlier cohort fills the registry when the batch alone cannot
    short = sc.L - (sc.N - len(sc.faulty_users()))
    if short > 0:
        cohort = [_new_user(f"w{i}", rd.shape, rd.setup, rd.rng) for i in range(short)]
        rd.settle(cohort, b"warmup")

    admitted, excluded = rd.settle(users, b"main")
    for u in excluded:
        m.outcomes[u.name]["reason"] = "excluded from batch"
    for u in admitted:
        m.outcomes[u.name]["admitted"] = True

    for u in admitted:
        r = rd.provision(u, _soul_address(u))
        m.provisioning_gas[u.name] = r.gas
        m.outcomes[u.name]["provisioned"] = r.ok
        if not r.ok:
            m.outcomes[u.name]["reason"] = r.reason
            m.rejects.append(("soul", r.reason))
    rd.ledger.tick()

    for i, u in enumerate(users):
        if sc.has("double_bind", i) and m.outcomes[u.name]["provisioned"]:
            r = rd.provision(u, _soul_address(u, 1))
            m.rejects.append(("soul", r.reason or "accepted"))
            m.outcomes[u.name]["second_binding"] = r.reason or "accepted"
        if sc.has("duplicate_phc", i):
            # the same credential comes back with fresh commitments and a fresh seed key
            x, W = phc_assignment(u.client.phc, u.client.holder_sig)
            inst, wit = client_generate(rd.shape, x, W, rd.setup, rd.rng)
            dup = _User(u.name + "-dup", u.client, lrs_keygen(rd.rng), inst, wit)
            rd.settle([dup], b"dup-" + u.name.encode())
            m.outcomes[u.name]["duplicate_resubmission"] = m.rejects[-1][1] if m.rejects else "accepted"
    rd.ledger.tick()

    n_adm = len(admitted)
    m.amortized_gas = amortized_cost(sc.N, sc.model)
    if n_adm:
        spent = (m.settlement_gas[-1] if m.settlement_gas else 0) + sum(m.provisioning_gas.values())
        m.realized_gas_per_user = Fraction(spent, n_adm)
    m.snapshot = rd.ledger.snapshot()
    m.tx_log = rd.ledger.tx_log_lines()
    m.timings["total"] = time.perf_counter() - t0
    faulty = {f"u{i}" for i in sc.faulty_users()}
    m.ok = all(o["admitted"] and o["provisioned"] for u, o in m.outcomes.items() if u not in faulty)
    return m


def write_run(metrics, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "metrics.jsonl", "w") as fh:
        for rec in metrics.records():
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    (out / "ledger_snapshot.json").write_bytes(metrics.snapshot)
    (out / "tx_log.jsonl").write_text(metrics.tx_log)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("user", "admitted", "provisioned", "reason"))
        for user, o in sorted(metrics.outcomes.items()):
            w.writerow((user, int(o["admitted"]), int(o["provisioned"]), o["reason"]))


# ---------------------------------------------------------------- cost curves

def _fmt(v):
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{float(v):.6f}"
    if isinstance(v, float):
        return f"{v:.2f}"
    return str(v)


def emit_cost_curves(n_values, l_values, model, out):
    """Write cost_curve.csv and ring_curve.csv; returns their paths."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = out / "cost_curve.csv", out / "ring_curve.csv"
    for path, header, rows in ((paths[0], COST_HEADER, cost_rows(n_values, model)),
                               (paths[1], RING_HEADER, ring_rows(l_values, model))):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    return paths


# ---------------------------------------------------------------- argument parsing

def read_kv(path):
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = (s.strip() for s in line.partition("="))
        if not sep:
            raise InvalidParams(f"{path}:{lineno}: expected key = value")
        out[key] = val
    return out


def read_faults(path):
    """One fault per line: ``<kind> [user index]``."""
    faults = []
    for raw in Path(path).read_text().splitlines():
        parts = raw.split("#", 1)[0].split()
        if parts:
            faults.append(Fault(parts[0], int(parts[1]) if len(parts) > 1 else -1))
    return tuple(faults)


def _bundled(name):
    return resources.files("zkams").joinpath("profiles", name)


def resolve_profile(value, base=None):
    if value is None:
        return load_profile()
    for cand in ([Path(base) / value] if base else []) + [Path(value)]:
        if cand.is_file():
            return load_profile(cand)
    bundled = _bundled(value)
    if bundled.is_file():
        return load_profile(bundled)
    raise InvalidParams(f"gas profile {value!r} not found")


def scenario_from_args(args):
    cfg, base = {}, None
    if args.config:
        cfg, base = read_kv(args.config), Path(args.config).parent
        unknown = set(cfg) - {"n", "ring", "backend", "seed", "profile", "faults", "chain_id"}
        if unknown:
            raise InvalidParams(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    faults_path = args.faults or (str(base / cfg["faults"]) if "faults" in cfg else None)
    return Scenario(
        N=args.n if args.n is not None else int(cfg.get("n", 4)),
        L=args.ring if args.ring is not None else int(cfg.get("ring", 11)),
        backend=args.backend or cfg.get("backend", "transparent"),
        seed=args.seed if args.seed is not None else int(cfg.get("seed", 1)),
        faults=read_faults(faults_path) if faults_path else (),
        model=resolve_profile(cfg.get("profile"), base),
        chain_id=int(cfg.get("chain_id", 1)),
    )


def build_parser():
    p = argparse.ArgumentParser(prog="zkams", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one admission scenario end to end")
    r.add_argument("--config", help="scenario file (key = value)")
    r.add_argument("--n", type=int, help="batch size")
    r.add_argument("--ring", type=int, help="ring size L")
    r.add_argument("--backend", choices=("transparent", "rlwe"))
    r.add_argument("--seed", type=int)
    r.add_argument("--faults", help="fault plan file")
    r.add_argument("--out", help="directory for metrics, snapshot and tx log")

    c = sub.add_parser("costs", help="emit gas and capacity curves")
    c.add_argument("--profile", help="gas profile file (default: bundled testnet profile)")
    c.add_argument("--n-max", type=int, default=1024)
    c.add_argument("--l-max", type=int, default=32)
    c.add_argument("--out", required=True)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "costs":
            model = resolve_profile(args.profile)
            paths = emit_cost_curves(range(1, args.n_max + 1), range(1, args.l_max + 1), model, args.out)
            print("\n".join(str(p) for p in paths))
            return 0
        scenario = scenario_from_args(args)
        store = ContentStore(Path(args.out) / "store") if args.out else None
        metrics = run_scenario(scenario, store)
    except InvalidParams as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        write_run(metrics, args.out)
    print(f"admitted {len(metrics.admitted)}/{scenario.N}, provisioned {len(metrics.provisioned)}/{scenario.N}, "
          f"rejects: {', '.join(r for _, r in metrics.rejects) or 'none'}")
    print(f"amortized gas per user {float(metrics.amortized_gas):.1f}, "
          f"snapshot {digest('zkams/snapshot', metrics.snapshot).hex()[:16]}")
    return 0 if metrics.ok else 1
