// SPDX-License-Identifier: Apache-2.0

//! Seeded synthetic transaction corpora for tests, demos and benchmarks.
//!
//! Malicious senders over-bid: they set large priority tips and gas limits far
//! above what execution uses. A minority of rows on both sides break the
//! pattern so the classes overlap.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calldata::{CalldataInput, SignatureClass, SignatureDirectory};
use crate::features::{LabeledTransaction, ReceiptRecord, TransactionRecord};

const GWEI: u128 = 1_000_000_000;
const ETHER: u128 = 1_000_000_000_000_000_000;

pub const BENIGN_SIGNATURES: [(&str, &str); 6] = [
    ("0xa9059cbb", "transfer(address,uint256)"),
    ("0x095ea7b3", "approve(address,uint256)"),
    ("0x23b872dd", "transferFrom(address,address,uint256)"),
    ("0x38ed1739", "swapExactTokensForTokens(uint256,uint256,address[],address,uint256)"),
    ("0xd0e30db0", "deposit()"),
    ("0x2e1a7d4d", "withdraw(uint256)"),
];

pub const MALICIOUS_SIGNATURES: [(&str, &str); 3] = [
    ("0x3ccfd60b", "withdraw()"),
    ("0xe9e05c42", "claimRewards(address)"),
    ("0x4e71d92d", "claim()"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub malicious_fraction: f64,
    /// Share of malicious rows that bid like benign ones.
    pub malicious_camouflage: f64,
    /// Share of benign rows that bid like malicious ones.
    pub benign_urgency: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { n_rows: 2000, malicious_fraction: 0.05, malicious_camouflage: 0.15, benign_urgency: 0.05, seed: 0 }
    }
}

/// Directory covering the selectors the generator emits.
pub fn directory() -> SignatureDirectory {
    let mut dir = SignatureDirectory::default();
    for (sel, sig) in BENIGN_SIGNATURES {
        dir.insert(sel, sig, SignatureClass::Benign).expect("valid selector");
    }
    for (sel, sig) in MALICIOUS_SIGNATURES {
        dir.insert(sel, sig, SignatureClass::Malicious).expect("valid selector");
    }
    dir
}

fn hex_word(rng: &mut ChaCha8Rng) -> String {
    // an address-like argument: 12 zero bytes then 20 random bytes
    let tail: String = (0..20).map(|_| format!("{:02x}", rng.random::<u8>())).collect();
    format!("{}{tail}", "0".repeat(24))
}

fn calldata(rng: &mut ChaCha8Rng, selector: &str, n_args: std::ops::Range<usize>) -> CalldataInput {
    let mut s = selector.to_string();
    for _ in 0..rng.random_range(n_args) {
        s.push_str(&hex_word(rng));
    }
    CalldataInput::parse(&s).expect("generated hex")
}

fn address(rng: &mut ChaCha8Rng) -> String {
    let body: String = (0..20).map(|_| format!("{:02x}", rng.random::<u8>())).collect();
    format!("0x{body}")
}

/// Generates `cfg.n_rows` labeled transactions; exactly
/// `round(n_rows * malicious_fraction)` are malicious, interleaved at random.
pub fn corpus(cfg: &SynthConfig) -> Vec<LabeledTransaction> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_mal = (cfg.n_rows as f64 * cfg.malicious_fraction).round() as usize;
    let mut labels: Vec<bool> = (0..cfg.n_rows).map(|i| i < n_mal).collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);

    let mut cumulative = 0u64;
    let mut block = 18_000_000u64;
    let mut base_fee = 20 * GWEI;
    labels
        .into_iter()
        .enumerate()
        .map(|(i, malicious)| {
            if i % 50 == 0 {
                block += 1;
                cumulative = 0;
                base_fee = rng.random_range(8..60) * GWEI;
            }
            let aggressive = if malicious {
                !rng.random_bool(cfg.malicious_camouflage)
            } else {
                rng.random_bool(cfg.benign_urgency)
            };

            let (input, to_is_contract, gas_used, value) = if malicious {
                let (input, used) = match rng.random_range(0..10) {
                    0..=4 => {
                        let (sel, _) = MALICIOUS_SIGNATURES[rng.random_range(0..MALICIOUS_SIGNATURES.len())];
                        (calldata(&mut rng, sel, 0..2), rng.random_range(60_000..400_000))
                    }
                    5..=7 => {
                        let (sel, _) = BENIGN_SIGNATURES[rng.random_range(0..BENIGN_SIGNATURES.len())];
                        (calldata(&mut rng, sel, 1..4), rng.random_range(45_000..250_000))
                    }
                    _ => (calldata(&mut rng, "0xdeadbeef", 0..3), rng.random_range(30_000..300_000)),
                };
                let value = if rng.random_bool(0.2) { rng.random_range(1..50) * ETHER / 100 } else { 0 };
                (input, true, used, value)
            } else if rng.random_bool(0.45) {
                (CalldataInput::parse("0x").expect("empty"), false, 21_000, rng.random_range(1..500) * ETHER / 100)
            } else {
                let (sel, _) = BENIGN_SIGNATURES[rng.random_range(0..BENIGN_SIGNATURES.len())];
                let input = calldata(&mut rng, sel, 1..4);
                let value = if rng.random_bool(0.1) { rng.random_range(1..200) * ETHER / 100 } else { 0 };
                (input, true, rng.random_range(35_000..200_000), value)
            };

            let headroom = if aggressive { rng.random_range(2.0..6.0) } else { rng.random_range(1.0..1.6) };
            let gas = if gas_used == 21_000 && !aggressive { 21_000 } else { (gas_used as f64 * headroom) as u64 };
            let tip = if aggressive {
                rng.random_range(5 * GWEI..60 * GWEI)
            } else {
                rng.random_range(GWEI / 10..3 * GWEI)
            };
            let eip1559 = rng.random_bool(if malicious { 0.9 } else { 0.75 });
            let (tx_type, gas_price, max_fee, max_tip, effective) = if eip1559 {
                let max_fee = base_fee * rng.random_range(12..25) / 10 + tip;
                let effective = (base_fee + tip).min(max_fee);
                (2u8, effective, Some(max_fee), Some(tip), effective)
            } else {
                let price = base_fee + tip;
                (0u8, price, None, None, price)
            };
            cumulative += gas_used;
            let hash = format!("0x{:064x}", (cfg.seed << 32) | i as u64);
            let status = u8::from(!rng.random_bool(if malicious { 0.15 } else { 0.02 }));
            let log_count = if status == 0 || !to_is_contract { 0 } else { rng.random_range(0..5) };
            LabeledTransaction {
                tx: TransactionRecord {
                    hash: hash.clone(),
                    from_addr: address(&mut rng),
                    to_addr: Some(address(&mut rng)),
                    gas,
                    gas_price,
                    max_fee_per_gas: max_fee,
                    max_priority_fee_per_gas: max_tip,
                    value,
                    input,
                    tx_type,
                    block_number: block,
                    nonce: rng.random_range(0..5000),
                },
                receipt: ReceiptRecord {
                    tx_hash: hash,
                    gas_used,
                    effective_gas_price: effective,
                    cumulative_gas_used: cumulative,
                    log_count,
                    status,
                    to_is_contract,
                },
                label: malicious,
            }
        })
        .collect()
}
