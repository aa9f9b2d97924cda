#include <doctest.h>

#include "fleetguard/crypto.hpp"
#include "fleetguard/error.hpp"
#include "fleetguard/update_protocol.hpp"
#include "update_traces.hpp"

using namespace fleetguard;
using namespace fleetguard::update;

namespace {

struct Setup {
    keystore::Keystore keys{77};
    keystore::KeyId pub{"publisher"};
    keystore::KeyId tsa_id{"tsa"};
    keystore::PublicKeyInfo pub_info = keys.generate_key(pub);
    keystore::PublicKeyInfo tsa_info = keys.generate_key(tsa_id);
    tsa::Tsa authority{keys, tsa_id};
    Bytes fw1 = to_bytes("factory firmware image v1");
    Bytes fw2 = to_bytes("firmware image v2 with fixes");
    Bytes fw3 = to_bytes("firmware image v3");
    FirmwareManifest m1 = build_manifest(fw1, "fw", 1, 100000, keys, pub, authority, 0);
    FirmwareManifest m2 = build_manifest(fw2, "fw", 2, 100, keys, pub, authority, 10);
    FirmwareManifest m3 = build_manifest(fw3, "fw", 3, 100000, keys, pub, authority, 20);

    DeviceUpdateState fresh() const { return factory_state(tsa_info, pub_info, m1); }
};

}  // namespace

TEST_CASE("build_manifest: fields, token, expiry guard")
{
    Setup s;
    CHECK(s.m2.token.gen_time == 10);
    CHECK(s.m2.version == 2);
    CHECK(s.m2.digest == crypto::sha256(ByteView(s.fw2)));
    CHECK(s.m2.token.imprint == s.m2.digest);
    CHECK(s.m2.debug.image_length == s.fw2.size());
    CHECK(device_verify(s.fresh(), s.m2, s.fw2, 50) == Verdict::accept());
    try {
        build_manifest(s.fw2, "fw", 2, 5, s.keys, s.pub, s.authority, 10);
        FAIL("expected ExpiryInPast");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ExpiryInPast);
    }
}

TEST_CASE("build_manifest: same seed, same bytes")
{
    Setup a, b;
    CHECK(encode(a.m2) == encode(b.m2));
    CHECK(to_json(a.m2).dump() == to_json(b.m2).dump());
}

TEST_CASE("device_verify: accept, rollback, expired, digest mismatch")
{
    Setup s;
    const auto v1 = s.fresh();
    CHECK(device_verify(v1, s.m2, s.fw2, 50) == Verdict::accept());

    const auto v2 = apply_update(v1, s.m2, s.fw2, 50).state;
    CHECK(device_verify(v2, s.m1, s.fw1, 60) == Verdict::reject(RejectReason::Rollback));
    CHECK(device_verify(v1, s.m2, s.fw2, 100) == Verdict::reject(RejectReason::Expired));
    CHECK(device_verify(v1, s.m2, s.fw2, 101) == Verdict::reject(RejectReason::Expired));

    Bytes tampered = s.fw2;
    tampered[3] ^= 1;
    const auto before = v1;
    CHECK(device_verify(v1, s.m2, tampered, 50) == Verdict::reject(RejectReason::DigestMismatch));
    CHECK(v1 == before);
    CHECK(to_string(Verdict::reject(RejectReason::Rollback)) == "Reject(Rollback)");
    CHECK(to_string(Verdict::accept()) == "Accept");
}

TEST_CASE("device_verify: signature and timestamp failures come first")
{
    Setup s;
    auto bad_sig = s.m2;
    bad_sig.publisher_sig[0] ^= 1;
    Bytes tampered = s.fw2;
    tampered[0] ^= 1;
    CHECK(device_verify(s.fresh(), bad_sig, tampered, 500) == Verdict::reject(RejectReason::BadPublisherSig));

    keystore::Keystore rogue(5);
    keystore::KeyId rid("tsa");
    rogue.generate_key(rid);
    tsa::Tsa rogue_tsa(rogue, rid);
    const auto m = build_manifest(s.fw2, "fw", 2, 1000, s.keys, s.pub, rogue_tsa, 10);
    CHECK(device_verify(s.fresh(), m, tampered, 5000) == Verdict::reject(RejectReason::UntrustedTimestamp));
}

TEST_CASE("rollback needs both version and timestamp to advance")
{
    Setup s;
    const auto v3 = apply_update(s.fresh(), s.m3, s.fw3, 30).state;
    // Higher version, older timestamp.
    const auto late = build_manifest(s.fw2, "fw", 9, 100000, s.keys, s.pub, s.authority, 15);
    CHECK(device_verify(v3, late, s.fw2, 40) == Verdict::reject(RejectReason::Rollback));
    // Newer timestamp, same version.
    const auto same = build_manifest(s.fw2, "fw", 3, 100000, s.keys, s.pub, s.authority, 40);
    CHECK(device_verify(v3, same, s.fw2, 50) == Verdict::reject(RejectReason::Rollback));
    // Replay of the accepted manifest.
    CHECK(device_verify(v3, s.m3, s.fw3, 50) == Verdict::reject(RejectReason::Rollback));
}

TEST_CASE("apply_update: slot flip, rejection record, sequential updates")
{
    Setup s;
    const auto v1 = s.fresh();
    CHECK(v1.active_slot == Slot::A);
    auto r = apply_update(v1, s.m2, s.fw2, 50);
    CHECK(r.verdict.accepted());
    CHECK(r.state.active_slot == Slot::B);
    CHECK(r.state.slot(Slot::B).version == 2);
    CHECK(r.state.slot(Slot::B).verified);
    CHECK(r.state.mode == Mode::Running);
    CHECK_FALSE(r.rejection.has_value());

    auto r3 = apply_update(r.state, s.m3, s.fw3, 60);
    CHECK(r3.state.active().version == 3);
    CHECK(r3.state.active_slot == Slot::A);
    CHECK(r3.state.slot(r3.state.inactive_slot()).version == 2);

    auto rej = apply_update(r3.state, s.m2, s.fw2, 70);
    CHECK(rej.state == r3.state);
    REQUIRE(rej.rejection.has_value());
    CHECK(rej.rejection->reason == RejectReason::Rollback);
    CHECK(rej.rejection->version == 2);
    CHECK(rej.rejection->time == 70);
    CHECK(rej.rejection->firmware_id == "fw");
}

TEST_CASE("interrupt, boot and recovery")
{
    Setup s;
    const auto v1 = s.fresh();
    const auto cut = interrupt_update(v1, s.m2, s.fw2, 0.5);
    CHECK(cut.mode == Mode::Updating);
    CHECK(cut.active() == v1.active());
    CHECK_FALSE(cut.slot(Slot::B).verified);
    CHECK_THROWS_AS(interrupt_update(v1, s.m2, s.fw2, 1.0), Error);
    CHECK_THROWS_AS(interrupt_update(v1, s.m2, s.fw2, -0.1), Error);

    const auto booted = boot(cut);
    REQUIRE(booted.booted.has_value());
    CHECK(*booted.booted == Slot::A);
    CHECK(booted.state.mode == Mode::Running);

    CHECK(apply_update(cut, s.m2, s.fw2, 50).verdict.accepted());

    // Inactive verified, active not: boot falls back and makes it active.
    auto odd = apply_update(v1, s.m2, s.fw2, 50).state;
    odd.slot(Slot::B).verified = false;
    const auto fallback = boot(odd);
    CHECK(fallback.booted == Slot::A);
    CHECK(fallback.state.active_slot == Slot::A);

    auto broken = v1;
    broken.slots[0].verified = false;
    broken.slots[1].verified = false;
    const auto failed = boot(broken);
    CHECK_FALSE(failed.booted.has_value());
    CHECK(failed.state.mode == Mode::FailState);
    CHECK(apply_update(failed.state, s.m2, s.fw2, 50).verdict == Verdict::reject(RejectReason::DeviceInFailState));
    CHECK(interrupt_update(failed.state, s.m2, s.fw2, 0.3) == failed.state);

    CHECK_THROWS_AS(recover_to_trusted(v1, s.m1, s.fw1, 50), Error);
    const auto recovered = recover_to_trusted(failed.state, s.m1, s.fw1, 50);
    CHECK(recovered.mode == Mode::Running);
    CHECK(recovered.active_slot == Slot::A);
    CHECK(recovered.active().version == 1);
    CHECK(recovered.active().verified);
    CHECK(recovered.needs_reprovision);

    auto bad = s.m1;
    bad.publisher_sig[5] ^= 2;
    try {
        recover_to_trusted(failed.state, bad, s.fw1, 50);
        FAIL("expected RecoveryRefused");
    } catch (const RecoveryRefused& e) {
        CHECK(e.reason() == RejectReason::BadPublisherSig);
        CHECK(e.code() == Errc::RecoveryRefused);
    }
    try {
        recover_to_trusted(failed.state, s.m2, s.fw2, 500);
        FAIL("expected RecoveryRefused");
    } catch (const RecoveryRefused& e) {
        CHECK(e.reason() == RejectReason::Expired);
    }
}

TEST_CASE("encodings round trip")
{
    Setup s;
    auto m = s.m2;
    m.debug.feint_regions.push_back({4, 8, "decoy"});
    CHECK(manifest_from_json(nlohmann::json::parse(to_json(m).dump())) == m);
    auto bin = decode(encode(m));
    CHECK(bin.digest == m.digest);
    CHECK(bin.publisher_sig == m.publisher_sig);
    CHECK(bin.token == m.token);
    CHECK(device_verify(s.fresh(), bin, s.fw2, 50).accepted());
    const auto st = apply_update(s.fresh(), s.m2, s.fw2, 50).state;
    CHECK(state_from_json(nlohmann::json::parse(to_json(st).dump())) == st);
    // Debug metadata is not signed.
    CHECK(device_verify(s.fresh(), m, s.fw2, 50).accepted());
}

TEST_CASE("adversarial traces: no unverified boot, first-failing reason every time")
{
    traces::World world;
    std::mt19937_64 rng(5);
    traces::Outcome out;
    for (int t = 0; t < 300; ++t) traces::run_trace(world, rng, out);
    for (const auto& n : out.notes) MESSAGE(n);
    CHECK(out.unverified_boots == 0);
    CHECK(out.reason_mismatches == 0);
    CHECK(out.monotonicity_violations == 0);
    CHECK(out.accepts > 0);
    CHECK(out.rejects > 0);
}
