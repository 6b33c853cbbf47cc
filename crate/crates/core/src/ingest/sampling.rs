// SPDX-License-Identifier: Apache-2.0

//! Benign sampling from the same blocks as known-malicious transactions.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::labels::{IdKind, LabelStore};
use super::rpc::RpcClient;
use super::wire::BlockSummary;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BenignSample {
    pub tx_hashes: Vec<String>,
    pub notes: Vec<String>,
}

/// Draws up to `per_block` hashes per block, skipping hashes labeled malicious.
///
/// Blocks are visited in the given order (duplicates once) and the draw
/// within each block is uniform without replacement from one seeded stream.
pub fn sample_from_blocks(blocks: &[BlockSummary], store: &LabelStore, per_block: usize, rng_seed: u64) -> Result<BenignSample> {
    if per_block == 0 {
        return Err(Error::InvalidConfig("per_block must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = BenignSample::default();
    let mut seen = std::collections::BTreeSet::new();
    for block in blocks {
        if !seen.insert(block.number) {
            continue;
        }
        let eligible: Vec<&String> =
            block.tx_hashes.iter().filter(|h| !store.is_malicious(IdKind::TxHash, h)).collect();
        if eligible.is_empty() {
            out.notes.push(format!("block {} has no eligible transactions; skipped", block.number));
            continue;
        }
        if eligible.len() <= per_block {
            out.tx_hashes.extend(eligible.into_iter().cloned());
            continue;
        }
        let mut picked: Vec<usize> = index::sample(&mut rng, eligible.len(), per_block).into_vec();
        picked.sort_unstable();
        out.tx_hashes.extend(picked.into_iter().map(|i| eligible[i].clone()));
    }
    Ok(out)
}

/// Fetches each block over RPC and samples benign hashes from it.
pub fn sample_benign(
    client: &RpcClient,
    malicious_block_numbers: &[u64],
    per_block: usize,
    rng_seed: u64,
    store: &LabelStore,
) -> Result<BenignSample> {
    let mut numbers = Vec::new();
    for &n in malicious_block_numbers {
        if !numbers.contains(&n) {
            numbers.push(n);
        }
    }
    let blocks = client
        .fetch_many(&numbers, |c, &n| c.fetch_block(n))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    sample_from_blocks(&blocks, store, per_block, rng_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::labels::{Label, LabelEntry, MergeSummary};

    fn hash(n: usize) -> String {
        format!("0x{:064x}", n)
    }

    fn block_of(number: u64, n: usize) -> BlockSummary {
        BlockSummary { number, tx_hashes: (0..n).map(|i| hash(number as usize * 100 + i)).collect() }
    }

    fn store_with(bad: &str) -> LabelStore {
        let mut s = LabelStore::default();
        s.merge_one(
            (IdKind::TxHash, bad.to_string()),
            LabelEntry { label: Label::Malicious, source: "t".into(), observed_at: 0 },
            &mut MergeSummary::default(),
        );
        s
    }

    #[test]
    fn excludes_malicious() {
        let block = block_of(1, 10);
        let store = store_with(&block.tx_hashes[3]);
        for seed in 0..50 {
            let s = sample_from_blocks(std::slice::from_ref(&block), &store, 2, seed).unwrap();
            assert_eq!(s.tx_hashes.len(), 2);
            assert!(!s.tx_hashes.contains(&block.tx_hashes[3]));
        }
    }

    #[test]
    fn small_blocks_return_everything_eligible() {
        let block = block_of(2, 3);
        let store = store_with(&block.tx_hashes[0]);
        let s = sample_from_blocks(std::slice::from_ref(&block), &store, 5, 1).unwrap();
        assert_eq!(s.tx_hashes, block.tx_hashes[1..].to_vec());
    }

    #[test]
    fn empty_block_noted() {
        let s = sample_from_blocks(&[block_of(3, 0)], &LabelStore::default(), 2, 1).unwrap();
        assert!(s.tx_hashes.is_empty());
        assert_eq!(s.notes.len(), 1);
    }

    #[test]
    fn seeded() {
        let blocks = [block_of(4, 30), block_of(5, 30)];
        let a = sample_from_blocks(&blocks, &LabelStore::default(), 4, 9).unwrap();
        let b = sample_from_blocks(&blocks, &LabelStore::default(), 4, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.tx_hashes.len(), 8);
    }
}
