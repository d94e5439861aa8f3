import pytest
from hypothesis import given, settings, strategies as st

from batman import errors
from batman.identity import IdentityRegistry, Role
from batman.scenario import master_hash, registration
from batman.weboftrust import Status, WebOfTrust, signature_hash

NAMES = ("alpha", "bravo", "charlie", "delta")


@pytest.fixture
def wot(reg_payloads):
    reg = IdentityRegistry(max_key_lifetime=2000)
    for name in NAMES:
        p = reg_payloads[name]
        reg.register_identity(p.to_identity(), p.pow_nonce)
    return WebOfTrust(reg)


A, B, C, D = (master_hash(n) for n in NAMES)


def test_endorse_recorded(wot):
    e = wot.endorse(A, B, 10)
    assert e.signer == A and e.subject == B and e.at == 10
    assert e.signature_hash == signature_hash(A, B, wot.registry.get(B).hash_uuid, 10)
    assert wot.endorsements(B) == [e]


def test_self_endorsement(wot):
    with pytest.raises(errors.SelfEndorsement):
        wot.endorse(A, A, 10)


def test_unknown_identity(wot):
    with pytest.raises(errors.UnknownIdentity):
        wot.endorse(A, master_hash("nobody"), 10)
    with pytest.raises(errors.UnknownIdentity):
        wot.endorse(master_hash("nobody"), A, 10)


def test_signer_key_expired(wot):
    # Signing key window is [0, 1000): construct expiry, then endorse.
    assert not wot.registry.is_key_valid(A, Role.SIGNING, 1000)
    with pytest.raises(errors.SignerKeyInvalid):
        wot.endorse(A, B, 1000)
    assert wot.registry.is_key_valid(A, Role.SIGNING, 999)
    wot.endorse(A, B, 999)


def test_signer_master_revoked(wot):
    wot.registry.revoke_master(A, 5)
    with pytest.raises(errors.SignerKeyInvalid):
        wot.endorse(A, B, 10)


def test_subject_master_revoked(wot):
    wot.registry.revoke_master(B, 5)
    with pytest.raises(errors.MasterRevoked):
        wot.endorse(A, B, 10)


def test_duplicate_endorsement(wot):
    wot.endorse(A, B, 10)
    with pytest.raises(errors.DuplicateEndorsement):
        wot.endorse(A, B, 11)


def test_status_counting(wot):
    assert wot.validation_status(B, 20, 1) is Status.UNVALIDATED
    wot.endorse(A, B, 10)
    wot.endorse(C, B, 11)
    assert wot.validation_status(B, 20, 2) is Status.VALIDATED
    assert wot.validation_status(B, 20, 3) is Status.UNVALIDATED


def test_revoked_signer_stops_counting(wot):
    wot.endorse(A, B, 10)
    wot.endorse(C, B, 11)
    wot.registry.revoke_master(C, 15)
    # Oracle: brute-force filter over the endorsement list.
    live = [e for e in wot.endorsements(B) if wot.registry.get(e.signer).revoked_at is None]
    assert len(live) == 1
    assert wot.validation_status(B, 20, 2) is Status.UNVALIDATED
    assert wot.validation_status(B, 14, 2) is Status.VALIDATED


def test_endorsement_counts_only_after_it_was_made(wot):
    wot.endorse(A, B, 10)
    assert wot.validation_status(B, 9, 1) is Status.UNVALIDATED
    assert wot.validation_status(B, 10, 1) is Status.VALIDATED


def test_status_unknown_subject(wot):
    with pytest.raises(errors.UnknownIdentity):
        wot.validation_status(master_hash("nobody"), 0, 1)


ops = st.lists(
    st.tuples(st.sampled_from(["endorse", "revoke"]), st.sampled_from(range(4)),
              st.sampled_from(range(4))),
    max_size=30,
)


@settings(max_examples=60, deadline=None)
@given(ops)
def test_status_properties(reg_payloads, sequence):
    reg = IdentityRegistry(max_key_lifetime=2000)
    for name in NAMES:
        p = reg_payloads[name]
        reg.register_identity(p.to_identity(), p.pow_nonce)
    wot = WebOfTrust(reg)
    ids = [A, B, C, D]
    tick = 0
    for kind, i, j in sequence:
        tick += 3
        before = [wot.live_count(x, tick) for x in ids]
        try:
            if kind == "endorse":
                wot.endorse(ids[i], ids[j], tick)
            else:
                reg.revoke_master(ids[i], tick)
        except errors.ContractError:
            continue
        if kind == "revoke":
            after = [wot.live_count(x, tick) for x in ids]
            assert all(a <= b for a, b in zip(after, before))
    for subject in ids:
        for k in range(0, 5):
            if wot.validation_status(subject, tick, k) is Status.VALIDATED:
                assert all(wot.validation_status(subject, tick, kk) is Status.VALIDATED
                           for kk in range(k + 1))
