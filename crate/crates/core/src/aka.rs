//! LTE AKA attach behavior under shared IMSIs: sequence-number state on both
//! sides, sync_failure and resynchronization, mass-attach simulation, and the
//! per-connection context key that disambiguates devices sharing one IMSI.
//!
//! The MAC and key-derivation functions are modeled with a keyed SHA-256
//! rather than MILENAGE; the phenomenon under study is pure counter algebra
//! and does not depend on the cipher.

use crate::rng::derive_rng;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// SQN is a 48-bit counter on both the SIM and the HSS.
pub const SQN_MASK: u64 = (1 << 48) - 1;

#[derive(Debug, Error, PartialEq)]
pub enum AkaError {
    /// MAC mismatch: the vector was not produced under this UE's key.
    #[error("authentication reject: AUTN MAC invalid")]
    AuthReject,
    /// Resynchronization token failed its MAC check at the HSS.
    #[error("resync reject: AUTS MAC invalid")]
    ResyncReject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Ue,
    Hss,
}

/// One side of the AKA exchange: shared key K and the 48-bit SQN counter.
#[derive(Debug, Clone)]
pub struct AkaPeer {
    pub role: Role,
    pub k: [u8; 16],
    pub sqn: u64,
}

impl AkaPeer {
    pub fn new(role: Role, k: [u8; 16]) -> Self {
        AkaPeer { role, k, sqn: 0 }
    }

    pub fn increment_sqn(&mut self) {
        self.sqn = (self.sqn + 1) & SQN_MASK;
    }
}

/// Authentication vector the HSS hands to the MME: nonce, AUTN binding the
/// HSS's SQN, the expected response, and the derived session key.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuthVector {
    pub rand: [u8; 16],
    pub autn: Autn,
    pub xres: [u8; 8],
    pub k_asme: [u8; 32],
}

/// AUTN: the SQN concealed with the anonymity key AK = f5(K, RAND), plus a
/// MAC over (K, RAND, SQN). Only a holder of K can recover and verify SQN.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Autn {
    pub sqn_xor_ak: [u8; 6],
    pub mac: [u8; 8],
}

/// Resynchronization token: the UE's SQN concealed with AK* and a MAC, so the
/// HSS can verify and adopt it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Auts {
    pub sqn_xor_ak: [u8; 6],
    pub mac: [u8; 8],
}

fn prf(k: &[u8; 16], tag: &[u8], parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"pgpp.aka.v1");
    h.update([tag.len() as u8]);
    h.update(tag);
    h.update(k);
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

fn sqn_bytes(sqn: u64) -> [u8; 6] {
    let b = sqn.to_be_bytes();
    [b[2], b[3], b[4], b[5], b[6], b[7]]
}

fn sqn_from_bytes(b: &[u8; 6]) -> u64 {
    let mut w = [0u8; 8];
    w[2..].copy_from_slice(b);
    u64::from_be_bytes(w)
}

fn xor6(a: &[u8; 6], b: &[u8]) -> [u8; 6] {
    let mut out = [0u8; 6];
    for i in 0..6 {
        out[i] = a[i] ^ b[i];
    }
    out
}

fn f_mac(k: &[u8; 16], rand: &[u8; 16], sqn: u64) -> [u8; 8] {
    let d = prf(k, b"mac", &[rand, &sqn_bytes(sqn)]);
    d[..8].try_into().unwrap()
}

fn f_ak(k: &[u8; 16], rand: &[u8; 16]) -> [u8; 6] {
    let d = prf(k, b"ak", &[rand]);
    d[..6].try_into().unwrap()
}

fn f_ak_star(k: &[u8; 16], rand: &[u8; 16]) -> [u8; 6] {
    let d = prf(k, b"ak*", &[rand]);
    d[..6].try_into().unwrap()
}

fn f_mac_s(k: &[u8; 16], rand: &[u8; 16], sqn: u64) -> [u8; 8] {
    let d = prf(k, b"mac-s", &[rand, &sqn_bytes(sqn)]);
    d[..8].try_into().unwrap()
}

fn f_res(k: &[u8; 16], rand: &[u8; 16]) -> [u8; 8] {
    let d = prf(k, b"res", &[rand]);
    d[..8].try_into().unwrap()
}

fn f_kasme(k: &[u8; 16], rand: &[u8; 16], sqn: u64) -> [u8; 32] {
    prf(k, b"kasme", &[rand, &sqn_bytes(sqn)])
}

/// Generate a fresh authentication vector binding the HSS's current SQN.
pub fn hss_generate_vector(hss: &AkaPeer, rng: &mut impl RngCore) -> AuthVector {
    let mut rand = [0u8; 16];
    rng.fill_bytes(&mut rand);
    vector_for_rand(hss, rand)
}

fn vector_for_rand(hss: &AkaPeer, rand: [u8; 16]) -> AuthVector {
    let ak = f_ak(&hss.k, &rand);
    AuthVector {
        rand,
        autn: Autn {
            sqn_xor_ak: xor6(&sqn_bytes(hss.sqn), &ak),
            mac: f_mac(&hss.k, &rand, hss.sqn),
        },
        xres: f_res(&hss.k, &rand),
        k_asme: f_kasme(&hss.k, &rand, hss.sqn),
    }
}

/// UE-side outcome of checking an authentication vector.
#[derive(Debug, Clone)]
pub enum UeCheckOutcome {
    Ok { res: [u8; 8], k_asme: [u8; 32] },
    /// SQN mismatch: the UE answers with a resync token carrying its own SQN.
    SyncFailure(Auts),
}

/// Verify the vector's MAC, recover the embedded SQN, and compare it to the
/// UE's counter. `window` widens acceptance: the embedded SQN may exceed the
/// UE's by at most `window` (0 = exact match).
pub fn ue_check(
    ue: &AkaPeer,
    vector: &AuthVector,
    window: u64,
) -> Result<UeCheckOutcome, AkaError> {
    let ak = f_ak(&ue.k, &vector.rand);
    let sqn_hss = sqn_from_bytes(&xor6(&vector.autn.sqn_xor_ak, &ak));
    if f_mac(&ue.k, &vector.rand, sqn_hss) != vector.autn.mac {
        return Err(AkaError::AuthReject);
    }
    let delta = sqn_hss.wrapping_sub(ue.sqn) & SQN_MASK;
    if delta <= window {
        Ok(UeCheckOutcome::Ok {
            res: f_res(&ue.k, &vector.rand),
            k_asme: f_kasme(&ue.k, &vector.rand, sqn_hss),
        })
    } else {
        let ak_s = f_ak_star(&ue.k, &vector.rand);
        Ok(UeCheckOutcome::SyncFailure(Auts {
            sqn_xor_ak: xor6(&sqn_bytes(ue.sqn), &ak_s),
            mac: f_mac_s(&ue.k, &vector.rand, ue.sqn),
        }))
    }
}

/// Adopt the UE's SQN from a verified resync token.
pub fn hss_resync(hss: &mut AkaPeer, rand: &[u8; 16], auts: &Auts) -> Result<(), AkaError> {
    let ak_s = f_ak_star(&hss.k, rand);
    let sqn_ue = sqn_from_bytes(&xor6(&auts.sqn_xor_ak, &ak_s));
    if f_mac_s(&hss.k, rand, sqn_ue) != auts.mac {
        return Err(AkaError::ResyncReject);
    }
    hss.sqn = sqn_ue;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttachResult {
    Attached,
    Failed,
}

/// Outcome of one UE's attach procedure in the mass-attach simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttachOutcome {
    pub ue_id: String,
    pub attempts: u32,
    pub sync_failures: u32,
    /// Delay from simulation start (simultaneous arrival) to completion.
    pub total_delay_ms: f64,
    pub result: AttachResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassAttachConfig {
    pub n_ues: usize,
    pub shared_imsi: bool,
    /// Mean per-round latency; rounds sample uniformly within ±25%.
    pub round_latency_ms: f64,
    pub sqn_window: u64,
    pub seed: u64,
}

impl MassAttachConfig {
    pub fn new(n_ues: usize, shared_imsi: bool, seed: u64) -> Self {
        MassAttachConfig {
            n_ues,
            shared_imsi,
            round_latency_ms: 200.0,
            sqn_window: 0,
            seed,
        }
    }
}

/// Simulate `n_ues` simultaneous attach attempts.
///
/// With a shared IMSI all UEs contend for one HSS record; attach procedures
/// are serialized through it in a seed-randomized arrival order, so each
/// sync_failure costs one resync plus one full extra attach round and later
/// arrivals also wait behind earlier ones. With unique IMSIs (one record per
/// UE, as with per-connection contexts) every UE attaches in one attempt and
/// proceeds independently.
pub fn simulate_mass_attach(cfg: &MassAttachConfig) -> Vec<AttachOutcome> {
    assert!(cfg.n_ues >= 1, "n_ues must be >= 1");
    let mut rng = derive_rng(cfg.seed, "aka");
    let k = {
        let mut k = [0u8; 16];
        rng.fill_bytes(&mut k);
        k
    };

    let mut order: Vec<usize> = (0..cfg.n_ues).collect();
    // randomized arrival order
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }

    let mut ues: Vec<AkaPeer> = (0..cfg.n_ues).map(|_| AkaPeer::new(Role::Ue, k)).collect();
    let mut shared_hss = AkaPeer::new(Role::Hss, k);
    let mut outcomes: Vec<Option<AttachOutcome>> = vec![None; cfg.n_ues];
    let mut clock_ms = 0.0f64;

    for &ue_idx in &order {
        let mut attempts = 0u32;
        let mut sync_failures = 0u32;
        let mut own_ms = 0.0f64;
        let mut hss_own = AkaPeer::new(Role::Hss, k); // per-UE record when not shared
        loop {
            attempts += 1;
            own_ms += cfg.round_latency_ms * rng.gen_range(0.75..1.25);
            let hss: &mut AkaPeer = if cfg.shared_imsi { &mut shared_hss } else { &mut hss_own };
            let vector = hss_generate_vector(hss, &mut rng);
            match ue_check(&ues[ue_idx], &vector, cfg.sqn_window)
                .expect("same K everywhere: MAC always valid")
            {
                UeCheckOutcome::Ok { .. } => {
                    hss.increment_sqn();
                    ues[ue_idx].increment_sqn();
                    break;
                }
                UeCheckOutcome::SyncFailure(auts) => {
                    sync_failures += 1;
                    hss_resync(hss, &vector.rand, &auts).expect("same K: AUTS valid");
                }
            }
        }
        let total_delay_ms = if cfg.shared_imsi {
            // serialized contention on the shared record
            clock_ms += own_ms;
            clock_ms
        } else {
            own_ms
        };
        outcomes[ue_idx] = Some(AttachOutcome {
            ue_id: format!("ue{:04}", ue_idx),
            attempts,
            sync_failures,
            total_delay_ms,
            result: AttachResult::Attached,
        });
    }
    outcomes.into_iter().map(|o| o.expect("all served")).collect()
}

/// Derive the per-connection context key that stands in for the IMSI when
/// many devices share one: deterministic in (imsi, salt), 128-bit output.
pub fn pgpp_context_key(imsi: &str, connection_salt: &[u8]) -> [u8; 16] {
    let mut h = Sha256::new();
    h.update(b"pgpp.ctxkey.v1");
    h.update((imsi.len() as u64).to_le_bytes());
    h.update(imsi.as_bytes());
    h.update(connection_salt);
    let d = h.finalize();
    d[..16].try_into().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn peer_pair() -> (AkaPeer, AkaPeer) {
        let k = [7u8; 16];
        (AkaPeer::new(Role::Ue, k), AkaPeer::new(Role::Hss, k))
    }

    #[test]
    fn fresh_vectors_have_distinct_rand() {
        let (_, hss) = peer_pair();
        let mut rng = derive_rng(1, "t");
        let a = hss_generate_vector(&hss, &mut rng);
        let b = hss_generate_vector(&hss, &mut rng);
        assert_ne!(a.rand, b.rand);
    }

    #[test]
    fn matched_sqn_accepts_and_res_matches_xres() {
        let (ue, hss) = peer_pair();
        let mut rng = derive_rng(2, "t");
        let v = hss_generate_vector(&hss, &mut rng);
        match ue_check(&ue, &v, 0).unwrap() {
            UeCheckOutcome::Ok { res, k_asme } => {
                assert_eq!(res, v.xres);
                assert_eq!(k_asme, v.k_asme);
            }
            other => panic!("expected ok, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_sqn_is_sync_failure_with_recoverable_hint() {
        let (ue, mut hss) = peer_pair();
        hss.sqn = 3; // ue.sqn = 0 = hss.sqn - 3
        let mut rng = derive_rng(3, "t");
        let v = hss_generate_vector(&hss, &mut rng);
        match ue_check(&ue, &v, 0).unwrap() {
            UeCheckOutcome::SyncFailure(auts) => {
                hss_resync(&mut hss, &v.rand, &auts).unwrap();
                assert_eq!(hss.sqn, ue.sqn);
            }
            other => panic!("expected sync_failure, got {other:?}"),
        }
    }

    #[test]
    fn wrong_key_is_auth_reject_not_sync_failure() {
        let (mut ue, hss) = peer_pair();
        ue.k = [9u8; 16];
        let mut rng = derive_rng(4, "t");
        let v = hss_generate_vector(&hss, &mut rng);
        assert_eq!(ue_check(&ue, &v, 0).unwrap_err(), AkaError::AuthReject);
    }

    #[test]
    fn acceptance_window_widens_match() {
        let (ue, mut hss) = peer_pair();
        hss.sqn = 2;
        let mut rng = derive_rng(5, "t");
        let v = hss_generate_vector(&hss, &mut rng);
        assert!(matches!(
            ue_check(&ue, &v, 2).unwrap(),
            UeCheckOutcome::Ok { .. }
        ));
        assert!(matches!(
            ue_check(&ue, &v, 1).unwrap(),
            UeCheckOutcome::SyncFailure(_)
        ));
    }

    #[test]
    fn sqn_wraps_at_48_bits() {
        let (_, mut hss) = peer_pair();
        hss.sqn = SQN_MASK;
        hss.increment_sqn();
        assert_eq!(hss.sqn, 0);
    }

    #[test]
    fn single_shared_ue_attaches_first_try() {
        let out = simulate_mass_attach(&MassAttachConfig::new(1, true, 1));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].attempts, 1);
        assert_eq!(out[0].sync_failures, 0);
    }

    #[test]
    fn second_sequential_ue_hits_exactly_one_sync_failure() {
        let out = simulate_mass_attach(&MassAttachConfig::new(2, true, 3));
        let mut failures: Vec<u32> = out.iter().map(|o| o.sync_failures).collect();
        failures.sort_unstable();
        assert_eq!(failures, vec![0, 1]);
    }

    #[test]
    fn unique_contexts_never_fail() {
        let out = simulate_mass_attach(&MassAttachConfig::new(50, false, 3));
        assert!(out.iter().all(|o| o.attempts == 1 && o.sync_failures == 0));
    }

    #[test]
    fn shared_completion_spread_exceeds_baseline() {
        let shared = simulate_mass_attach(&MassAttachConfig::new(100, true, 5));
        let baseline = simulate_mass_attach(&MassAttachConfig::new(100, false, 5));
        let spread = |v: &[AttachOutcome]| {
            v.iter().map(|o| o.total_delay_ms).fold(0.0, f64::max)
                - v.iter().map(|o| o.total_delay_ms).fold(f64::INFINITY, f64::min)
        };
        assert!(spread(&shared) > spread(&baseline));
        assert!(baseline.iter().all(|o| o.sync_failures == 0));
        assert!(shared.iter().all(|o| o.result == AttachResult::Attached));
    }

    #[test]
    fn message_schema_carries_no_identity() {
        // every over-the-air struct serializes to fields from this allowlist
        let allow = ["rand", "autn", "xres", "k_asme", "sqn_xor_ak", "mac"];
        let (ue, hss) = peer_pair();
        let mut rng = derive_rng(6, "t");
        let v = hss_generate_vector(&hss, &mut rng);
        let mut jsons = vec![serde_json::to_value(&v).unwrap()];
        let mut ue2 = ue.clone();
        ue2.sqn = 5;
        if let UeCheckOutcome::SyncFailure(auts) = ue_check(&ue2, &v, 0).unwrap() {
            jsons.push(serde_json::to_value(&auts).unwrap());
        }
        fn walk(v: &serde_json::Value, allow: &[&str]) {
            if let serde_json::Value::Object(map) = v {
                for (k, inner) in map {
                    assert!(allow.contains(&k.as_str()), "field '{k}' not allowed");
                    walk(inner, allow);
                }
            }
        }
        for j in &jsons {
            walk(j, &allow);
        }
    }

    #[test]
    fn context_keys_distinct_per_salt_and_stable() {
        let a = pgpp_context_key("999990000000001", b"salt-1");
        let b = pgpp_context_key("999990000000001", b"salt-2");
        let c = pgpp_context_key("999990000000001", b"salt-1");
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn context_keys_collision_free_at_scale() {
        use std::collections::HashSet;
        let mut seen = HashSet::new();
        for i in 0u32..100_000 {
            let key = pgpp_context_key("999990000000001", &i.to_le_bytes());
            assert!(seen.insert(key), "collision at {i}");
        }
    }
}
