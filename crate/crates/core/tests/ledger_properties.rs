use licensechain::codescan::FunctionHash;
use licensechain::contracts::{ContractTx, DownloadAgreementTx, ProjectId, ProjectRegistrationTx, WalletAddress};
use licensechain::digest::Hash256;
use licensechain::ledger::{
    append_block, verify_chain, verify_serialized, Chain, LedgerError, ValidatorBehavior, ValidatorPool,
};
use licensechain::licensing::LicenseId;
use proptest::prelude::*;

fn wallet(seed: u8) -> WalletAddress {
    format!("0x{}", format!("{seed:02x}").repeat(20)).parse().unwrap()
}

fn tx_strategy() -> impl Strategy<Value = ContractTx> {
    let license = (0..LicenseId::ALL.len()).prop_map(|i| LicenseId::ALL[i]);
    let registration = (any::<u8>(), 1u64..500, license.clone(), prop::collection::vec(any::<[u8; 32]>(), 0..5))
        .prop_map(|(w, n, license, raw)| {
            let mut function_hashes: Vec<FunctionHash> =
                raw.into_iter().map(|b| FunctionHash(Hash256::from_bytes(b))).collect();
            function_hashes.sort();
            function_hashes.dedup();
            ContractTx::ProjectRegistration(ProjectRegistrationTx {
                uploader: wallet(w),
                project_id: ProjectId::numbered(n),
                parents: vec![],
                license,
                function_hashes,
            })
        });
    let agreement = (any::<u8>(), 1u64..500, license, any::<u32>()).prop_map(|(w, n, license, ts)| {
        ContractTx::DownloadAgreement(DownloadAgreementTx {
            downloader: wallet(w),
            project_id: ProjectId::numbered(n),
            license,
            timestamp: u64::from(ts),
        })
    });
    prop_oneof![registration, agreement]
}

fn build(txs: &[(ContractTx, u32)]) -> Chain {
    let pool = ValidatorPool::default();
    let mut chain = Chain::new();
    for (tx, ts) in txs {
        append_block(&mut chain, tx.clone(), u64::from(*ts), &pool).unwrap();
    }
    chain
}

fn behavior_strategy() -> impl Strategy<Value = ValidatorBehavior> {
    prop_oneof![Just(ValidatorBehavior::CorruptPrevHash), Just(ValidatorBehavior::RejectAll)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn any_single_byte_mutation_fails_at_its_block(
        txs in prop::collection::vec((tx_strategy(), any::<u32>()), 0..20),
        pos_seed in any::<prop::sample::Index>(),
        delta in 1u8..=255,
    ) {
        let chain = build(&txs);
        prop_assert!(verify_chain(&chain).valid);
        let bytes = chain.to_bytes();
        prop_assert!(verify_serialized(&bytes).valid);

        let pos = pos_seed.index(bytes.len());
        let mut tampered = bytes.clone();
        tampered[pos] = tampered[pos].wrapping_add(delta);
        let line = bytes[..pos].iter().filter(|b| **b == b'\n').count() as u64;
        let report = verify_serialized(&tampered);
        prop_assert!(!report.valid);
        prop_assert_eq!(report.first_failure().map(|c| c.index), Some(line));
    }

    #[test]
    fn in_memory_tampering_is_detected(
        txs in prop::collection::vec((tx_strategy(), any::<u32>()), 1..15),
        which in any::<prop::sample::Index>(),
        ts in any::<u32>(),
    ) {
        let chain = build(&txs);
        let mut blocks = chain.blocks().to_vec();
        let i = which.index(blocks.len() - 1) + 1;
        let new_ts = u64::from(ts);
        prop_assume!(blocks[i].timestamp != new_ts);
        blocks[i].timestamp = new_ts;
        let report = verify_chain(&Chain::from_blocks_unchecked(blocks));
        prop_assert!(!report.valid);
        prop_assert_eq!(report.first_failure().map(|c| c.index), Some(i as u64));
    }

    #[test]
    fn replay_is_bit_identical(txs in prop::collection::vec((tx_strategy(), any::<u32>()), 0..20)) {
        let a = build(&txs);
        let b = build(&txs);
        prop_assert_eq!(a.to_bytes(), b.to_bytes());
        prop_assert_eq!(Chain::from_bytes(&a.to_bytes()).unwrap().to_bytes(), a.to_bytes());
    }

    #[test]
    fn commit_iff_enough_honest_validators(
        n in 1usize..=7,
        t_seed in any::<prop::sample::Index>(),
        h_seed in any::<prop::sample::Index>(),
        behaviors in prop::collection::vec(behavior_strategy(), 7),
        order in any::<u64>(),
        tx in tx_strategy(),
    ) {
        let t = t_seed.index(n) + 1;
        let h = h_seed.index(n + 1);
        // place the dishonest validators at pseudo-random positions
        let mut slots: Vec<usize> = (0..n).collect();
        slots.sort_by_key(|i| (*i as u64).wrapping_mul(order | 1).rotate_left(17));
        let mut pool = ValidatorPool::new(n, t).unwrap();
        for (k, slot) in slots.iter().take(n - h).enumerate() {
            pool = pool.with_behavior(*slot, behaviors[k]);
        }

        let mut chain = build(&[]);
        let before = chain.to_bytes();
        let result = append_block(&mut chain, tx, 1, &pool);
        if h >= t {
            prop_assert!(result.is_ok(), "{:?}", result);
            prop_assert_eq!(chain.len(), 2);
            prop_assert!(verify_chain(&chain).valid);
        } else {
            let is_rejection = matches!(result, Err(LedgerError::ConsensusRejected { .. }));
            prop_assert!(is_rejection, "{:?}", result);
            prop_assert_eq!(chain.to_bytes(), before);
        }
    }

    #[test]
    fn failed_appends_never_mutate(
        txs in prop::collection::vec((tx_strategy(), any::<u32>()), 0..10),
        tx in tx_strategy(),
    ) {
        let mut chain = build(&txs);
        let before = chain.to_bytes();
        let rejecting = ValidatorPool::new(3, 2)
            .unwrap()
            .with_behavior(0, ValidatorBehavior::RejectAll)
            .with_behavior(2, ValidatorBehavior::CorruptPrevHash);
        prop_assert!(append_block(&mut chain, tx, 7, &rejecting).is_err());
        prop_assert!(append_block(&mut chain, ContractTx::Genesis, 7, &ValidatorPool::default()).is_err());
        prop_assert_eq!(chain.to_bytes(), before);
    }
}

#[test]
fn genesis_hash_matches_independent_digest() {
    // sha256 of the genesis header line, computed with Python's hashlib
    let header = br#"{"index":0,"timestamp":0,"prev_hash":"0000000000000000000000000000000000000000000000000000000000000000","tx":{"type":"genesis"}}"#;
    let chain = Chain::new();
    assert_eq!(chain.tip().block_hash, Hash256::of(header));
    assert_eq!(chain.tip().block_hash.to_hex(), GENESIS_HASH);
}

const GENESIS_HASH: &str = "c7a306052a09b92b07e7ea65886f267e66a9b9f19126521d81e704789c6cbe11";
