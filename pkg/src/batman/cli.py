"""``batman`` command-line entry point.

Exit codes: 0 success, 1 domain error, 2 usage error. Tunable values may
come from ``--config`` (flat ``key=value`` lines); flags override them.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import sys
from pathlib import Path
from types import SimpleNamespace
from typing import Optional, Sequence

from . import FORMAT_VERSION, __version__, errors, simharness, sybilguard
from .contracts import ChainParams, Endorse, RecordEvent, RevokeKey, RevokeMaster, RotateKey
from .identity import DEFAULT_MAX_KEY_LIFETIME, Role
from .ledger import Ledger, dump, load
from .reputation import METHODS
from .scenario import DEFAULT_KEY_LIFETIME, key_hash, random_ledger, registration

# Every tunable: (type, default). Config files may set any of these.
TUNABLES = {
    "seed": (int, 0),
    "nodes": (int, 10),
    "T": (int, 3000),
    "s": (int, 150),
    "N_e": (int, 150),
    "mu": (float, 0.5),
    "sigma": (float, 0.2),
    "p_arrival": (float, 1.0),
    "burn_in": (int, None),
    "seeds": (int, 1),
    "jobs": (int, 1),
    "block_size": (int, 10),
    "difficulty_bits": (int, sybilguard.DEFAULT_DIFFICULTY_BITS),
    "max_key_lifetime": (int, DEFAULT_MAX_KEY_LIFETIME),
    "k": (int, 1),
}

ROLE_NAMES = {role.name.lower(): role for role in Role}


class UsageError(Exception):
    pass


def read_config(path) -> dict:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in TUNABLES:
            raise UsageError(f"{path}:{lineno}: unknown or malformed entry {raw!r}")
        kind = TUNABLES[key][0]
        try:
            values[key] = kind(value.strip())
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}") from None
    return values


def setting(args, name: str):
    """Flag value if given, else config value, else the built-in default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in args.config_values:
        return args.config_values[name]
    return TUNABLES[name][1]


def int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from None


def float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None


def role_arg(text: str) -> Role:
    try:
        return ROLE_NAMES[text.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"role must be one of {sorted(ROLE_NAMES)}") from None


def hex_bytes(text: str) -> bytes:
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not hex: {text!r}") from None


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="RNG seed (default 0)")
    common.add_argument("--config", help="flat key=value file; flags override it")
    common.add_argument("--out", help="write output here instead of stdout")

    chain = argparse.ArgumentParser(add_help=False)
    chain.add_argument("--ledger", required=True, help="transaction dump file")
    chain.add_argument("--block-size", dest="block_size", type=int,
                       help="seal a block every N transactions on replay (default 10)")
    chain.add_argument("--difficulty-bits", dest="difficulty_bits", type=int,
                       help="proof-of-work difficulty (default 4, i.e. 1/16)")
    chain.add_argument("--max-key-lifetime", dest="max_key_lifetime", type=int)
    chain.add_argument("--s", type=int, help="reputation time window in ticks")
    chain.add_argument("--N_e", "--ne", dest="N_e", type=int, help="reputation event window")

    parser = argparse.ArgumentParser(prog="batman", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"batman {__version__} (format {FORMAT_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    # ledger
    p_ledger = sub.add_parser("ledger", help="ledger dumps, replay and integrity")
    s_ledger = p_ledger.add_subparsers(dest="action", required=True)
    p = s_ledger.add_parser("demo", parents=[common, chain], help="write a random valid scenario")
    p.add_argument("--txs", type=int, default=100)
    s_ledger.add_parser("verify", parents=[common, chain], help="replay and verify the hash chain")
    s_ledger.add_parser("show", parents=[common, chain], help="list sealed blocks")

    # identity
    p_id = sub.add_parser("identity", help="identity registry and key lifecycle")
    s_id = p_id.add_subparsers(dest="action", required=True)
    p = s_id.add_parser("register", parents=[common, chain])
    p.add_argument("hostname")
    p.add_argument("--at", type=int, default=0)
    p.add_argument("--lifetime", type=int, default=DEFAULT_KEY_LIFETIME)
    p.add_argument("--master-label", help="label the master key hash is derived from")
    p.add_argument("--master-hex", type=hex_bytes, help="explicit 32-byte master key hash")
    p = s_id.add_parser("rotate", parents=[common, chain])
    p.add_argument("hostname")
    p.add_argument("--role", type=role_arg, required=True)
    p.add_argument("--from", dest="valid_from", type=int, required=True)
    p.add_argument("--until", dest="valid_until", type=int, required=True)
    p.add_argument("--key-hex", type=hex_bytes)
    p = s_id.add_parser("revoke-key", parents=[common, chain])
    p.add_argument("hostname")
    p.add_argument("--role", type=role_arg, required=True)
    p.add_argument("--at", type=int, required=True)
    p = s_id.add_parser("revoke-master", parents=[common, chain])
    p.add_argument("hostname")
    p.add_argument("--at", type=int, required=True)
    p = s_id.add_parser("show", parents=[common, chain])
    p.add_argument("hostname")
    p.add_argument("--at", type=int, help="also report key validity at this tick")

    # web of trust
    p_wot = sub.add_parser("wot", help="peer endorsements")
    s_wot = p_wot.add_subparsers(dest="action", required=True)
    p = s_wot.add_parser("endorse", parents=[common, chain])
    p.add_argument("signer")
    p.add_argument("subject")
    p.add_argument("--at", type=int, required=True)
    p = s_wot.add_parser("status", parents=[common, chain])
    p.add_argument("subject")
    p.add_argument("--at", type=int, required=True)
    p.add_argument("--k", type=int)

    # proof of work
    p_pow = sub.add_parser("pow", help="proof-of-work on hash_uuid")
    s_pow = p_pow.add_subparsers(dest="action", required=True)
    p = s_pow.add_parser("mine", parents=[common])
    p.add_argument("--seed-hex", type=hex_bytes, required=True)
    p.add_argument("--difficulty-bits", dest="difficulty_bits", type=int)
    p.add_argument("--max-iters", type=int, default=1 << 20)
    p = s_pow.add_parser("verify", parents=[common])
    p.add_argument("--seed-hex", type=hex_bytes, required=True)
    p.add_argument("--nonce", type=int, required=True)
    p.add_argument("--uuid-hash-hex", type=hex_bytes, required=True)
    p.add_argument("--difficulty-bits", dest="difficulty_bits", type=int)

    # reputation
    p_rep = sub.add_parser("rep", help="reputation events and estimates")
    s_rep = p_rep.add_subparsers(dest="action", required=True)
    p = s_rep.add_parser("record", parents=[common, chain])
    p.add_argument("hostname")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--outcome", type=int, choices=(0, 1), required=True)
    p.add_argument("--reporter", help="hostname of the reporting node (default: the node)")
    p = s_rep.add_parser("query", parents=[common, chain])
    p.add_argument("hostname")
    p.add_argument("--method", choices=METHODS, default="mlm")
    p.add_argument("--now", type=int, help="window end for mlt (default: last event tick)")

    # simulation
    sim_opts = argparse.ArgumentParser(add_help=False)
    sim_opts.add_argument("--nodes", type=int)
    sim_opts.add_argument("--mu", type=float)
    sim_opts.add_argument("--sigma", type=float)
    sim_opts.add_argument("--p-arrival", dest="p_arrival", type=float)
    sim_opts.add_argument("--burn-in", dest="burn_in", type=int)

    p = sub.add_parser("simulate", parents=[common, sim_opts],
                       help="one run; per-tick estimate traces as CSV")
    p.add_argument("--T", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--N_e", "--ne", dest="N_e", type=int)
    p.add_argument("--p", dest="reliabilities", type=float_list,
                   help="fixed reliabilities, comma-separated, one per node")
    p.add_argument("--summary", action="store_true",
                   help="emit per-node error rows instead of traces")

    p = sub.add_parser("sweep", parents=[common, sim_opts],
                       help="error table over the T x s x N_e grid")
    p.add_argument("--grid-default", action="store_true",
                   help="T=500..5000/500, s=N_e=100..300/25 (also used for axes not given)")
    p.add_argument("--T-values", dest="T_values", type=int_list)
    p.add_argument("--s-values", dest="s_values", type=int_list)
    p.add_argument("--ne-values", dest="ne_values", type=int_list)
    p.add_argument("--seeds", type=int, help="number of seeds, counting up from --seed")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--aggregate", action="store_true",
                   help="emit mean MAE per (method, window) instead of rows")
    return parser


# --- handlers ----------------------------------------------------------------

def chain_params(args) -> ChainParams:
    return ChainParams(
        max_key_lifetime=setting(args, "max_key_lifetime"),
        pow_threshold=sybilguard.PowThreshold.from_difficulty_bits(
            setting(args, "difficulty_bits")).threshold,
        time_window=setting(args, "s"),
        event_window=setting(args, "N_e"),
    )


def open_ledger(args) -> Ledger:
    return load(args.ledger, chain_params(args), setting(args, "block_size"))


def submit(args, ledger: Ledger, payload, author: bytes, timestamp: int):
    result = ledger.submit(payload, author, timestamp)
    tx = ledger.transactions[-1]
    with open(args.ledger, "a", encoding="utf-8") as fh:
        fh.write(tx.encode().hex() + "\n")
    return result


def emit_json(out, record: dict) -> None:
    out.write(json.dumps(record, sort_keys=False) + "\n")


def cmd_ledger(args, out) -> None:
    if args.action == "demo":
        ledger = random_ledger(args.txs, setting(args, "seed"), chain_params(args),
                               setting(args, "block_size"))
        dump(ledger, args.ledger)
    else:
        ledger = open_ledger(args)
    if args.action == "show":
        for block in ledger.blocks:
            out.write(f"{block.height}\t{len(block.txs)}\t{block.prev_hash.hex()}\t"
                      f"{block.block_hash.hex()}\n")
        if ledger.open_txs:
            out.write(f"open\t{len(ledger.open_txs)}\n")
        return
    ok = ledger.verify_chain()
    emit_json(out, {
        "transactions": len(ledger),
        "blocks": len(ledger.blocks),
        "open": len(ledger.open_txs),
        "tip": ledger.tip_hash.hex(),
        "state_digest": ledger.state_digest().hex(),
        "verified": ok,
    })
    if not ok:
        raise errors.LedgerError("hash chain verification failed")


def identity_record(ledger: Ledger, identity, at: Optional[int]) -> dict:
    record = {
        "hostname": identity.hostname,
        "hash_m": identity.hash_m.hex(),
        "hash_uuid": identity.hash_uuid.hex(),
        "registered_at": identity.registered_at,
        "revoked_at": identity.revoked_at,
        "keys": {},
    }
    for role in Role:
        key = identity.keys[role]
        entry = {"key_hash": key.key_hash.hex(), "valid_from": key.valid_from,
                 "valid_until": key.valid_until, "revoked_at": key.revoked_at,
                 "superseded": len(identity.history.get(role, ()))}
        if at is not None:
            entry["valid_at"] = ledger.state.registry.is_key_valid(identity.hash_m, role, at)
        record["keys"][role.name.lower()] = entry
    return record


def cmd_identity(args, out) -> None:
    ledger = open_ledger(args)
    registry = ledger.state.registry
    if args.action == "register":
        threshold = ledger.params.pow_threshold
        payload = registration(args.hostname, args.at, label=args.master_label,
                               lifetime=args.lifetime, threshold=threshold,
                               hash_m=args.master_hex)
        receipt = submit(args, ledger, payload, payload.hash_m, args.at)
        emit_json(out, {"hostname": args.hostname, "hash_m": receipt.hash_m.hex(),
                        "hash_uuid": payload.hash_uuid.hex(), "pow_nonce": payload.pow_nonce,
                        "key_contract": receipt.key_contract_id.hex()})
        return
    identity = registry.by_hostname(args.hostname)
    if args.action == "show":
        emit_json(out, identity_record(ledger, identity, args.at))
        return
    if args.action == "rotate":
        generation = len(identity.history.get(args.role, ())) + 1
        new_key = args.key_hex or key_hash(args.hostname, args.role, generation)
        payload = RotateKey(identity.hash_m, args.role, new_key, args.valid_from, args.valid_until)
        tick = args.valid_from
    elif args.action == "revoke-key":
        payload, tick = RevokeKey(identity.hash_m, args.role, args.at), args.at
    else:
        payload, tick = RevokeMaster(identity.hash_m, args.at), args.at
    submit(args, ledger, payload, identity.hash_m, tick)
    emit_json(out, identity_record(ledger, identity, tick))


def cmd_wot(args, out) -> None:
    ledger = open_ledger(args)
    registry = ledger.state.registry
    subject = registry.by_hostname(args.subject)
    if args.action == "endorse":
        signer = registry.by_hostname(args.signer)
        endorsement = submit(args, ledger, Endorse(signer.hash_m, subject.hash_m, args.at),
                             signer.hash_m, args.at)
        emit_json(out, {"signer": args.signer, "subject": args.subject, "at": args.at,
                        "signature_hash": endorsement.signature_hash.hex()})
        return
    k = setting(args, "k")
    count = ledger.state.wot.live_count(subject.hash_m, args.at)
    status = ledger.state.wot.validation_status(subject.hash_m, args.at, k)
    emit_json(out, {"subject": args.subject, "count": count, "k": k, "status": status.value})


def cmd_pow(args, out) -> None:
    threshold = sybilguard.PowThreshold.from_difficulty_bits(setting(args, "difficulty_bits"))
    if args.action == "mine":
        uuid, nonce = sybilguard.mine_uuid(args.seed_hex, threshold, args.max_iters)
        out.write(f"nonce={nonce}\nuuid={uuid.hex()}\n"
                  f"hash_uuid={sybilguard.sha256(uuid).hex()}\niterations={nonce + 1}\n")
        return
    claim = SimpleNamespace(hash_m=args.seed_hex, hash_uuid=args.uuid_hash_hex)
    ok = sybilguard.verify_uuid(claim, args.nonce, threshold)
    out.write(f"valid={str(ok).lower()}\n")
    if not ok:
        raise errors.PowInvalid("hash does not match the nonce or exceeds the threshold")


def cmd_rep(args, out) -> None:
    ledger = open_ledger(args)
    registry = ledger.state.registry
    identity = registry.by_hostname(args.hostname)
    if args.action == "record":
        reporter = registry.by_hostname(args.reporter) if args.reporter else identity
        submit(args, ledger, RecordEvent(identity.hash_m, args.t, args.outcome),
               reporter.hash_m, args.t)
        emit_json(out, {"hostname": args.hostname, "t": args.t, "outcome": args.outcome})
        return
    contract = ledger.state.reputation[identity.hash_m]
    estimate = contract.estimate(args.method, args.now)
    emit_json(out, {"hostname": args.hostname, "method": args.method, "estimate": estimate,
                    "samples": contract.sample_count(args.method, args.now)})


def sim_config(args, **extra) -> simharness.SimConfig:
    reliabilities = getattr(args, "reliabilities", None)
    nodes = setting(args, "nodes")
    if reliabilities is not None and getattr(args, "nodes", None) is None:
        nodes = len(reliabilities)
    try:
        return simharness.SimConfig(
            n_nodes=nodes, mu=setting(args, "mu"), sigma=setting(args, "sigma"),
            T=setting(args, "T"), s=setting(args, "s"), N_e=setting(args, "N_e"),
            p_arrival=setting(args, "p_arrival"), seed=setting(args, "seed"),
            burn_in=setting(args, "burn_in"),
            reliabilities=tuple(reliabilities) if reliabilities is not None else None,
            **extra,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args, out) -> None:
    result = simharness.run_simulation(sim_config(args))
    if args.summary:
        simharness.write_rows(result.rows, out)
    else:
        simharness.write_traces(result, out)


def cmd_sweep(args, out) -> None:
    base = sim_config(args)
    T_values = args.T_values or list(simharness.DEFAULT_T_GRID)
    s_values = args.s_values if args.s_values is not None else list(simharness.DEFAULT_WINDOW_GRID)
    ne_values = args.ne_values if args.ne_values is not None else list(simharness.DEFAULT_WINDOW_GRID)
    seeds, jobs = setting(args, "seeds"), setting(args, "jobs")
    if seeds < 1 or jobs < 1 or any(T < 1 for T in T_values):
        raise UsageError("seeds, jobs and T values must be >= 1")
    try:
        rows = simharness.run_sweep(T_values, s_values, ne_values, seeds, base, jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.aggregate:
        out.write("method,window,mae\n")
        for (method, window), mae in simharness.aggregate_mae(rows).items():
            out.write(f"{method},{'' if window is None else window},{mae!r}\n")
    else:
        simharness.write_rows(rows, out)


HANDLERS = {
    "ledger": cmd_ledger,
    "identity": cmd_identity,
    "wot": cmd_wot,
    "pow": cmd_pow,
    "rep": cmd_rep,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def run_cli(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stderr(stderr), contextlib.redirect_stdout(stdout):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    buffer = io.StringIO()
    try:
        args.config_values = read_config(args.config) if args.config else {}
        HANDLERS[args.command](args, buffer)
    except UsageError as exc:
        parser.print_usage(stderr)
        stderr.write(f"batman: error: {exc}\n")
        return 2
    except errors.BatmanError as exc:
        stderr.write(f"batman: {type(exc).__name__}: {exc}\n")
        stdout.write(buffer.getvalue())
        return 1
    if args.out:
        Path(args.out).write_text(buffer.getvalue(), encoding="utf-8")
    else:
        stdout.write(buffer.getvalue())
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
