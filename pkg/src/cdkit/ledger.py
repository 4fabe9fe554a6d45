"""Modeled append-only chain of mixing transactions.

Three transaction kinds: coinbase (mints outputs), join-type (m inputs
funding m equal-valued outputs through a hidden pairing), and ring-type
(m referenced outputs of which exactly one is truly spent, authorized by
a linkable ring signature).

The hidden ground truth (which input funds which output, which ring
member is real, who owns which key) lives only in a WorldOracle that the
world generator and tests may read; nothing verification-side depends on
it, and serialized ledger bytes carry no function of it.

Canonical transaction bytes ("CDK/v1", hashed for ids and signed):

  type tag (0x00 coinbase, 0x01 join, 0x02 ring)
  || framed list of input/ring references
  || framed list of outputs

A reference is framed (tx_id, index); an output is framed
(serial, owner_pk, value). Signatures are not part of the identity bytes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .crypto import (
    GroupElement,
    KeyPair,
    RingSignature,
    Scalar,
    Signature,
    key_image,
    ring_sign,
    ring_verify,
    sign,
    verify,
)
from .wire import Reader, enc_bytes, enc_list, enc_u64

TAG_COINBASE = 0x00
TAG_JOIN = 0x01
TAG_RING = 0x02


class LedgerError(Exception):
    """A transaction was rejected or a reference failed to resolve."""


class UnknownOutputError(LedgerError):
    pass


@dataclass(frozen=True)
class OutputRef:
    tx_id: bytes
    index: int

    def encode(self) -> bytes:
        return enc_bytes(self.tx_id) + enc_u64(self.index)

    @classmethod
    def decode_from(cls, r: Reader) -> "OutputRef":
        return cls(r.bytes_(), r.u64())

    def to_dict(self) -> dict:
        return {"tx_id": self.tx_id.hex(), "index": self.index}

    @classmethod
    def from_dict(cls, d: dict) -> "OutputRef":
        return cls(bytes.fromhex(d["tx_id"]), int(d["index"]))

    def label(self) -> str:
        return f"{self.tx_id.hex()[:12]}:{self.index}"


@dataclass(frozen=True)
class Output:
    serial: int
    owner_pk: GroupElement
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("negative output value")

    def encode(self) -> bytes:
        return enc_u64(self.serial) + enc_bytes(self.owner_pk.encode()) + enc_u64(self.value)


def _encode_output_from(r: Reader) -> Output:
    return Output(r.u64(), GroupElement.decode(r.bytes_()), r.u64())


def _body(tag: int, refs: list[OutputRef], outputs: list[Output]) -> bytes:
    return (
        bytes([tag])
        + enc_list([ref.encode() for ref in refs])
        + enc_list([out.encode() for out in outputs])
    )


@dataclass(frozen=True)
class CoinbaseTx:
    outputs: tuple[Output, ...]

    @property
    def body(self) -> bytes:
        return _body(TAG_COINBASE, [], list(self.outputs))

    @property
    def id(self) -> bytes:
        return hashlib.sha256(self.body).digest()


@dataclass(frozen=True)
class JoinTx:
    inputs: tuple[OutputRef, ...]
    outputs: tuple[Output, ...]
    input_sigs: tuple[Signature, ...]

    @property
    def body(self) -> bytes:
        return _body(TAG_JOIN, list(self.inputs), list(self.outputs))

    @property
    def id(self) -> bytes:
        return hashlib.sha256(self.body).digest()


@dataclass(frozen=True)
class RingTx:
    ring: tuple[OutputRef, ...]
    output: Output
    ring_sig: RingSignature

    @property
    def body(self) -> bytes:
        return _body(TAG_RING, list(self.ring), [self.output])

    @property
    def id(self) -> bytes:
        return hashlib.sha256(self.body).digest()


Transaction = CoinbaseTx | JoinTx | RingTx


class Ledger:
    """Single-writer append-only transaction list with public indexes."""

    def __init__(self):
        self.transactions: list[Transaction] = []
        self.by_id: dict[bytes, Transaction] = {}
        self.position: dict[bytes, int] = {}
        self.outputs: dict[OutputRef, Output] = {}
        self.key_images: set[bytes] = set()
        self.join_spent: set[OutputRef] = set()
        self._next_serial = 0

    def new_serial(self) -> int:
        s = self._next_serial
        self._next_serial += 1
        return s

    def resolve(self, ref: OutputRef) -> Output:
        try:
            return self.outputs[ref]
        except KeyError:
            raise UnknownOutputError(f"unknown output {ref.label()}") from None

    def _admit(self, tx: Transaction) -> bytes:
        tx_id = tx.id
        if tx_id in self.by_id:
            raise LedgerError("duplicate transaction id")
        self.position[tx_id] = len(self.transactions)
        self.transactions.append(tx)
        self.by_id[tx_id] = tx
        outs = tx.outputs if not isinstance(tx, RingTx) else (tx.output,)
        for idx, out in enumerate(outs):
            self.outputs[OutputRef(tx_id, idx)] = out
        return tx_id

    def outputs_of(self, tx_id: bytes) -> tuple[Output, ...]:
        tx = self.by_id[tx_id]
        return (tx.output,) if isinstance(tx, RingTx) else tx.outputs

    def serialize(self) -> bytes:
        """Canonical bytes of the full chain, signatures included."""
        parts = []
        for tx in self.transactions:
            if isinstance(tx, CoinbaseTx):
                parts.append(tx.body)
            elif isinstance(tx, JoinTx):
                parts.append(tx.body + enc_list([s.encode() for s in tx.input_sigs]))
            else:
                parts.append(tx.body + enc_bytes(tx.ring_sig.encode()))
        return enc_list(parts)


@dataclass
class WorldOracle:
    """Hidden ground truth; off-limits to verification code paths.

    join_pairings maps a join tx id to the tuple p where output k is
    funded by input p[k]; ring_true_inputs maps a ring tx id to the index
    of the member actually spent.
    """

    join_pairings: dict[bytes, tuple[int, ...]] = field(default_factory=dict)
    ring_true_inputs: dict[bytes, int] = field(default_factory=dict)
    key_owner: dict[bytes, str] = field(default_factory=dict)
    secret_keys: dict[bytes, Scalar] = field(default_factory=dict)
    ring_spent: set[OutputRef] = field(default_factory=set)

    def register_key(self, kp: KeyPair, entity: str) -> None:
        enc = kp.pk.encode()
        self.key_owner[enc] = entity
        self.secret_keys[enc] = kp.sk

    def secret_for(self, pk: GroupElement) -> Scalar:
        try:
            return self.secret_keys[pk.encode()]
        except KeyError:
            raise LedgerError("oracle holds no secret key for this output") from None

    def owner_of(self, pk: GroupElement) -> str | None:
        return self.key_owner.get(pk.encode())

    def is_spent(self, ledger: Ledger, ref: OutputRef) -> bool:
        return ref in ledger.join_spent or ref in self.ring_spent


def resolve_ref(ledger: Ledger, ref: OutputRef) -> Output:
    return ledger.resolve(ref)


def append_coinbase(ledger: Ledger, owners: list[tuple[GroupElement, int]]) -> bytes:
    """Mint outputs with no inputs; bootstraps the modeled economy."""
    outs = tuple(Output(ledger.new_serial(), pk, value) for pk, value in owners)
    return ledger._admit(CoinbaseTx(outs))


def append_join_tx(
    ledger: Ledger,
    oracle: WorldOracle,
    input_refs: list[OutputRef],
    output_owners: list[GroupElement],
    pairing: list[int],
) -> bytes:
    """Append a join-type transaction; the pairing goes to the oracle only.

    pairing[k] is the input index funding output slot k.
    """
    m = len(input_refs)
    if m < 2:
        raise LedgerError("join transaction needs at least 2 inputs")
    if len(output_owners) != m or len(pairing) != m:
        raise LedgerError("inputs, outputs and pairing must have equal arity")
    if sorted(pairing) != list(range(m)):
        raise LedgerError("pairing is not a bijection")
    if len(set(input_refs)) != m:
        raise LedgerError("duplicate input reference")
    sources = [ledger.resolve(ref) for ref in input_refs]
    for ref in input_refs:
        if oracle.is_spent(ledger, ref):
            raise LedgerError(f"double spend of {ref.label()}")
    values = {src.value for src in sources}
    if len(values) != 1:
        raise LedgerError("join transaction values must be uniform")

    outs = tuple(
        Output(ledger.new_serial(), output_owners[k], sources[pairing[k]].value)
        for k in range(m)
    )
    body = _body(TAG_JOIN, input_refs, list(outs))
    sigs = tuple(sign(oracle.secret_for(src.owner_pk), body) for src in sources)
    tx_id = ledger._admit(JoinTx(tuple(input_refs), outs, sigs))
    oracle.join_pairings[tx_id] = tuple(pairing)
    ledger.join_spent.update(input_refs)
    return tx_id


def append_ring_tx(
    ledger: Ledger,
    oracle: WorldOracle,
    ring_refs: list[OutputRef],
    true_index: int,
    output_owner: GroupElement,
) -> bytes:
    """Append a ring-type transaction spending only ring_refs[true_index]."""
    m = len(ring_refs)
    if m < 1:
        raise LedgerError("empty ring")
    if len(set(ring_refs)) != m:
        raise LedgerError("duplicate ring member")
    if not 0 <= true_index < m:
        raise LedgerError("true input index out of range")
    members = [ledger.resolve(ref) for ref in ring_refs]
    values = {out.value for out in members}
    if len(values) != 1:
        raise LedgerError("ring member values must be uniform")
    true_out = members[true_index]
    sk = oracle.secret_for(true_out.owner_pk)
    spender = KeyPair(sk, true_out.owner_pk)
    image = key_image(spender)
    if image.encode() in ledger.key_images:
        raise LedgerError("double spend: key image already on ledger")
    if oracle.is_spent(ledger, ring_refs[true_index]):
        raise LedgerError(f"double spend of {ring_refs[true_index].label()}")

    out = Output(ledger.new_serial(), output_owner, true_out.value)
    body = _body(TAG_RING, ring_refs, [out])
    rsig = ring_sign([o.owner_pk for o in members], true_index, sk, body)
    tx_id = ledger._admit(RingTx(tuple(ring_refs), out, rsig))
    ledger.key_images.add(rsig.key_image.encode())
    oracle.ring_true_inputs[tx_id] = true_index
    oracle.ring_spent.add(ring_refs[true_index])
    return tx_id


def validate_ledger(ledger: Ledger, check_signatures: bool = True) -> list[str]:
    """Recheck the whole chain; returns all violations (empty means ok)."""
    violations: list[str] = []
    seen_serials: set[int] = set()
    seen_images: set[bytes] = set()
    join_spent: set[OutputRef] = set()
    known: dict[OutputRef, Output] = {}
    positions: dict[bytes, int] = {}

    for pos, tx in enumerate(ledger.transactions):
        tx_id = tx.id
        short = tx_id.hex()[:12]
        if tx_id in positions:
            violations.append(f"{short}: duplicate transaction id")
        positions[tx_id] = pos

        refs: tuple[OutputRef, ...]
        if isinstance(tx, CoinbaseTx):
            refs, outs = (), tx.outputs
        elif isinstance(tx, JoinTx):
            refs, outs = tx.inputs, tx.outputs
        else:
            refs, outs = tx.ring, (tx.output,)

        resolved: list[Output | None] = []
        for ref in refs:
            if ref.tx_id not in positions or positions[ref.tx_id] >= pos:
                violations.append(f"{short}: ordering: reference to {ref.label()} not in the past")
                resolved.append(None)
                continue
            out = known.get(ref)
            if out is None:
                violations.append(f"{short}: unresolvable reference {ref.label()}")
            resolved.append(out)

        for idx, out in enumerate(outs):
            if out.serial in seen_serials:
                violations.append(f"{short}: duplicate output serial {out.serial}")
            seen_serials.add(out.serial)
            known[OutputRef(tx_id, idx)] = out

        if isinstance(tx, JoinTx):
            m = len(tx.inputs)
            if m < 2 or len(tx.outputs) != m:
                violations.append(f"{short}: join arity invalid")
            if len(tx.input_sigs) != m:
                violations.append(f"{short}: join signature count mismatch")
            vals = {o.value for o in resolved if o is not None}
            if len(vals) > 1 or any(o.value not in vals for o in tx.outputs if vals):
                violations.append(f"{short}: join values not uniform")
            for ref in tx.inputs:
                if ref in join_spent:
                    violations.append(f"{short}: double spend of {ref.label()}")
                join_spent.add(ref)
            if check_signatures:
                for src, sig in zip(resolved, tx.input_sigs):
                    if src is not None and not verify(src.owner_pk, tx.body, sig):
                        violations.append(f"{short}: invalid input signature")
        elif isinstance(tx, RingTx):
            if len(set(tx.ring)) != len(tx.ring):
                violations.append(f"{short}: duplicate ring member")
            vals = {o.value for o in resolved if o is not None}
            if len(vals) > 1 or (vals and tx.output.value not in vals):
                violations.append(f"{short}: ring values not uniform")
            image = tx.ring_sig.key_image.encode()
            if image in seen_images:
                violations.append(f"{short}: key image reuse")
            seen_images.add(image)
            if check_signatures and all(o is not None for o in resolved):
                pks = [o.owner_pk for o in resolved]  # type: ignore[union-attr]
                if not ring_verify(pks, tx.body, tx.ring_sig):
                    violations.append(f"{short}: invalid ring signature")
    return violations


# ---------------------------------------------------------------------------
# JSON interchange (hex-encoded crypto material, deterministic key order)
# ---------------------------------------------------------------------------


def tx_to_dict(tx: Transaction) -> dict:
    if isinstance(tx, CoinbaseTx):
        return {
            "type": "coinbase",
            "id": tx.id.hex(),
            "outputs": [_out_dict(o) for o in tx.outputs],
        }
    if isinstance(tx, JoinTx):
        return {
            "type": "join",
            "id": tx.id.hex(),
            "inputs": [r.to_dict() for r in tx.inputs],
            "outputs": [_out_dict(o) for o in tx.outputs],
            "input_sigs": [s.encode().hex() for s in tx.input_sigs],
        }
    return {
        "type": "ring",
        "id": tx.id.hex(),
        "ring": [r.to_dict() for r in tx.ring],
        "outputs": [_out_dict(tx.output)],
        "ring_sig": tx.ring_sig.encode().hex(),
    }


def _out_dict(o: Output) -> dict:
    return {"serial": o.serial, "owner_pk": o.owner_pk.encode().hex(), "value": o.value}


def _out_from_dict(d: dict) -> Output:
    return Output(int(d["serial"]), GroupElement.decode(bytes.fromhex(d["owner_pk"])), int(d["value"]))


def tx_from_dict(d: dict) -> Transaction:
    kind = d["type"]
    outs = tuple(_out_from_dict(o) for o in d["outputs"])
    if kind == "coinbase":
        return CoinbaseTx(outs)
    if kind == "join":
        return JoinTx(
            tuple(OutputRef.from_dict(r) for r in d["inputs"]),
            outs,
            tuple(Signature.decode(bytes.fromhex(s)) for s in d["input_sigs"]),
        )
    if kind == "ring":
        return RingTx(
            tuple(OutputRef.from_dict(r) for r in d["ring"]),
            outs[0],
            RingSignature.decode(bytes.fromhex(d["ring_sig"])),
        )
    raise LedgerError(f"unknown transaction type {kind!r}")


def ledger_to_dict(ledger: Ledger) -> dict:
    return {
        "version": "CDK/v1",
        "transactions": [tx_to_dict(tx) for tx in ledger.transactions],
    }


def ledger_from_dict(d: dict) -> Ledger:
    if d.get("version") != "CDK/v1":
        raise LedgerError("unsupported ledger version")
    ledger = Ledger()
    for td in d["transactions"]:
        tx = tx_from_dict(td)
        declared = bytes.fromhex(td["id"])
        if tx.id != declared:
            raise LedgerError("transaction id does not match canonical bytes")
        ledger._admit(tx)
        if isinstance(tx, JoinTx):
            ledger.join_spent.update(tx.inputs)
        elif isinstance(tx, RingTx):
            ledger.key_images.add(tx.ring_sig.key_image.encode())
    ledger._next_serial = 1 + max(
        (o.serial for o in ledger.outputs.values()), default=-1
    )
    return ledger


def oracle_to_dict(oracle: WorldOracle) -> dict:
    return {
        "version": "CDK/v1",
        "ground_truth": True,
        "join_pairings": {k.hex(): list(v) for k, v in sorted(oracle.join_pairings.items())},
        "ring_true_inputs": {k.hex(): v for k, v in sorted(oracle.ring_true_inputs.items())},
        "key_owner": {k.hex(): v for k, v in sorted(oracle.key_owner.items())},
        "secret_keys": {k.hex(): v.encode().hex() for k, v in sorted(oracle.secret_keys.items())},
        "ring_spent": [r.to_dict() for r in sorted(oracle.ring_spent, key=lambda r: (r.tx_id, r.index))],
    }


def oracle_from_dict(d: dict) -> WorldOracle:
    if not d.get("ground_truth"):
        raise LedgerError("not a ground-truth file")
    return WorldOracle(
        join_pairings={bytes.fromhex(k): tuple(v) for k, v in d["join_pairings"].items()},
        ring_true_inputs={bytes.fromhex(k): int(v) for k, v in d["ring_true_inputs"].items()},
        key_owner={bytes.fromhex(k): v for k, v in d["key_owner"].items()},
        secret_keys={bytes.fromhex(k): Scalar.decode(bytes.fromhex(v)) for k, v in d["secret_keys"].items()},
        ring_spent={OutputRef.from_dict(r) for r in d["ring_spent"]},
    )
