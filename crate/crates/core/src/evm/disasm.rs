// SPDX-License-Identifier: Apache-2.0

//! Linear-sweep disassembly and the token representations built on top of it.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::opcode::Opcode;

/// Default sequence length fed to the opcode models.
pub const DEFAULT_MAX_LEN: usize = 600;
pub const DEFAULT_PAD_TOKEN: &str = "PAD";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub offset: usize,
    pub opcode: Opcode,
    /// PUSH data; shorter than `opcode.immediate_len()` only when `truncated`.
    pub immediate: Vec<u8>,
    pub truncated: bool,
}

impl Instruction {
    /// Encoded size in bytes as it appeared in the input.
    pub fn size(&self) -> usize {
        1 + self.immediate.len()
    }

    pub fn mnemonic(&self) -> &'static str {
        self.opcode.mnemonic()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OpcodeSequence {
    pub instructions: Vec<Instruction>,
    /// Contract address or content hash the bytecode came from.
    pub source_id: String,
}

impl OpcodeSequence {
    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn with_source(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    pub fn mnemonics(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.instructions.iter().map(Instruction::mnemonic)
    }

    /// Re-encodes the instructions; equal to the disassembled input.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.instructions.iter().map(Instruction::size).sum());
        for ins in &self.instructions {
            out.push(ins.opcode.byte());
            out.extend_from_slice(&ins.immediate);
        }
        out
    }

    /// Human-readable listing, one `offset mnemonic [0ximmediate]` line per instruction.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for ins in &self.instructions {
            out.push_str(&format!("{:04x} {}", ins.offset, ins.mnemonic()));
            if !ins.immediate.is_empty() {
                out.push_str(" 0x");
                for b in &ins.immediate {
                    out.push_str(&format!("{b:02x}"));
                }
            }
            if ins.truncated {
                out.push_str(" (truncated)");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizeConfig {
    pub max_len: usize,
    pub pad_token: String,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        Self { max_len: DEFAULT_MAX_LEN, pad_token: DEFAULT_PAD_TOKEN.to_string() }
    }
}

impl NormalizeConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.max_len == 0 {
            return Err(crate::Error::InvalidConfig("normalize.max_len must be >= 1".into()));
        }
        Ok(())
    }
}

/// Disassembles raw EVM bytecode with a single linear sweep.
///
/// PUSH immediates are consumed inline. Bytes outside the opcode table become
/// `UNKNOWN_0xNN` instructions, and a PUSH whose data runs past the end of the
/// input is kept with whatever bytes remain and flagged `truncated`.
pub fn disassemble(bytecode: &[u8]) -> OpcodeSequence {
    let mut instructions = Vec::new();
    let mut pc = 0;
    while pc < bytecode.len() {
        let opcode = Opcode::new(bytecode[pc]);
        let want = opcode.immediate_len();
        let start = pc + 1;
        let end = (start + want).min(bytecode.len());
        instructions.push(Instruction {
            offset: pc,
            opcode,
            immediate: bytecode[start..end].to_vec(),
            truncated: end - start < want,
        });
        pc = end;
    }
    OpcodeSequence { instructions, source_id: String::new() }
}

/// Maps a sequence onto exactly `cfg.max_len` mnemonic tokens.
///
/// Longer sequences lose their prefix (the last `max_len` instructions are
/// kept); shorter ones are right-padded with `cfg.pad_token`.
pub fn normalize_sequence(seq: &OpcodeSequence, cfg: &NormalizeConfig) -> Vec<String> {
    let skip = seq.len().saturating_sub(cfg.max_len);
    let mut tokens: Vec<String> = seq.mnemonics().skip(skip).map(str::to_string).collect();
    tokens.resize(cfg.max_len, cfg.pad_token.clone());
    tokens
}

/// Unigram (and optionally bigram) counts over the non-pad tokens.
///
/// Names are `uni:<MNEM>` and `bi:<A>|<B>`, in first-occurrence order. Bigrams
/// never span a pad token.
pub fn ngram_features(tokens: &[String], n_max: usize, pad_token: &str) -> IndexMap<String, f64> {
    assert!((1..=2).contains(&n_max), "n_max must be 1 or 2");
    let mut counts: IndexMap<String, f64> = IndexMap::new();
    for tok in tokens.iter().filter(|t| *t != pad_token) {
        *counts.entry(format!("uni:{tok}")).or_insert(0.0) += 1.0;
    }
    if n_max == 2 {
        for pair in tokens.windows(2) {
            if pair[0] == pad_token || pair[1] == pad_token {
                continue;
            }
            *counts.entry(format!("bi:{}|{}", pair[0], pair[1])).or_insert(0.0) += 1.0;
        }
    }
    counts
}

/// Binary presence vector of `vocabulary` mnemonics within `seq`.
pub fn occurrence_vector(seq: &OpcodeSequence, vocabulary: &[String]) -> Vec<u8> {
    let present: std::collections::HashSet<&str> = seq.mnemonics().collect();
    vocabulary.iter().map(|m| u8::from(present.contains(m.as_str()))).collect()
}

/// The `k` most frequent mnemonics across `seqs` by number of sequences
/// containing them; ties resolve alphabetically.
pub fn top_k_vocabulary<'a>(seqs: impl IntoIterator<Item = &'a OpcodeSequence>, k: usize) -> Vec<String> {
    let mut freq: std::collections::BTreeMap<&'static str, usize> = Default::default();
    for seq in seqs {
        let uniq: std::collections::BTreeSet<&'static str> = seq.mnemonics().collect();
        for m in uniq {
            *freq.entry(m).or_default() += 1;
        }
    }
    let mut ranked: Vec<_> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.into_iter().take(k).map(|(m, _)| m.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq_of(bytes: &[u8]) -> OpcodeSequence {
        disassemble(bytes)
    }

    #[test]
    fn push_add_example() {
        let seq = disassemble(&[0x60, 0x01, 0x60, 0x02, 0x01]);
        let got: Vec<_> = seq
            .instructions
            .iter()
            .map(|i| (i.offset, i.mnemonic(), i.immediate.clone(), i.truncated))
            .collect();
        assert_eq!(
            got,
            vec![
                (0, "PUSH1", vec![0x01], false),
                (2, "PUSH1", vec![0x02], false),
                (4, "ADD", vec![], false),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(disassemble(&[]).is_empty());
    }

    #[test]
    fn truncated_trailing_push() {
        let seq = disassemble(&[0x61, 0xaa]);
        assert_eq!(seq.len(), 1);
        let ins = &seq.instructions[0];
        assert_eq!(ins.mnemonic(), "PUSH2");
        assert_eq!(ins.immediate, vec![0xaa]);
        assert!(ins.truncated);
        assert_eq!(seq.to_bytes(), vec![0x61, 0xaa]);
    }

    #[test]
    fn push0_has_no_immediate() {
        let seq = disassemble(&[0x5f, 0x5f, 0x01]);
        assert_eq!(seq.mnemonics().collect::<Vec<_>>(), ["PUSH0", "PUSH0", "ADD"]);
    }

    #[test]
    fn unknown_bytes_survive() {
        let seq = disassemble(&[0x0c, 0xef]);
        assert_eq!(seq.mnemonics().collect::<Vec<_>>(), ["UNKNOWN_0x0C", "UNKNOWN_0xEF"]);
    }

    #[test]
    fn listing_format() {
        let text = disassemble(&[0x60, 0x01, 0x60, 0x02, 0x01]).listing();
        assert_eq!(text, "0000 PUSH1 0x01\n0002 PUSH1 0x02\n0004 ADD\n");
    }

    #[test]
    fn normalize_truncates_prefix() {
        let bytes: Vec<u8> = (0..700).map(|i| if i < 100 { 0x01 } else { 0x02 }).collect();
        let tokens = normalize_sequence(&seq_of(&bytes), &NormalizeConfig::default());
        assert_eq!(tokens.len(), 600);
        assert!(tokens.iter().all(|t| t == "MUL"));
    }

    #[test]
    fn normalize_pads() {
        let tokens = normalize_sequence(&seq_of(&[0x60, 1, 0x60, 2, 0x01]), &NormalizeConfig::default());
        assert_eq!(&tokens[..3], ["PUSH1", "PUSH1", "ADD"]);
        assert_eq!(tokens.len(), 600);
        assert!(tokens[3..].iter().all(|t| t == "PAD"));
    }

    #[test]
    fn normalize_exact_length_is_identity() {
        let bytes: Vec<u8> = (0..600).map(|i| (i % 2) as u8 + 1).collect();
        let seq = seq_of(&bytes);
        let tokens = normalize_sequence(&seq, &NormalizeConfig::default());
        assert_eq!(tokens, seq.mnemonics().map(str::to_string).collect::<Vec<_>>());
    }

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ngram_counts() {
        let t = toks(&["PUSH1", "ADD", "PUSH1"]);
        let uni = ngram_features(&t, 1, "PAD");
        assert_eq!(uni.len(), 2);
        assert_eq!(uni["uni:PUSH1"], 2.0);
        assert_eq!(uni["uni:ADD"], 1.0);
        let bi = ngram_features(&t, 2, "PAD");
        assert_eq!(bi.len(), 4);
        assert_eq!(bi["bi:PUSH1|ADD"], 1.0);
        assert_eq!(bi["bi:ADD|PUSH1"], 1.0);
    }

    #[test]
    fn ngram_all_pad_is_empty() {
        assert!(ngram_features(&toks(&["PAD"; 10]), 2, "PAD").is_empty());
    }

    #[test]
    fn occurrence_examples() {
        let vocab = toks(&["ADD", "MUL", "PUSH1"]);
        assert_eq!(occurrence_vector(&seq_of(&[0x60, 0x00, 0x01]), &vocab), vec![1, 0, 1]);
        assert_eq!(occurrence_vector(&seq_of(&[]), &vocab), vec![0, 0, 0]);
        assert_eq!(occurrence_vector(&seq_of(&[0x01; 50]), &toks(&["ADD"])), vec![1]);
    }

    #[test]
    fn top_k_by_document_frequency() {
        let a = seq_of(&[0x01, 0x01, 0x02]);
        let b = seq_of(&[0x01, 0x03]);
        assert_eq!(top_k_vocabulary([&a, &b], 2), ["ADD", "MUL"]);
    }

    proptest! {
        #[test]
        fn roundtrip_reserialization(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
            let seq = disassemble(&bytes);
            prop_assert_eq!(seq.to_bytes(), bytes.clone());
            let mut expected_offset = 0;
            for (k, ins) in seq.instructions.iter().enumerate() {
                prop_assert_eq!(ins.offset, expected_offset);
                prop_assert_eq!(ins.truncated, ins.immediate.len() < ins.opcode.immediate_len());
                if ins.truncated {
                    prop_assert_eq!(k, seq.len() - 1);
                }
                expected_offset += ins.size();
            }
        }

        #[test]
        fn normalized_length_is_fixed(bytes in proptest::collection::vec(any::<u8>(), 0..300), max_len in 1usize..200) {
            let cfg = NormalizeConfig { max_len, ..Default::default() };
            prop_assert_eq!(normalize_sequence(&disassemble(&bytes), &cfg).len(), max_len);
        }

        #[test]
        fn unigrams_sum_to_non_pad(bytes in proptest::collection::vec(any::<u8>(), 0..300)) {
            let tokens = normalize_sequence(&disassemble(&bytes), &NormalizeConfig { max_len: 128, ..Default::default() });
            let non_pad = tokens.iter().filter(|t| *t != "PAD").count() as f64;
            let total: f64 = ngram_features(&tokens, 2, "PAD")
                .iter()
                .filter(|(k, _)| k.starts_with("uni:"))
                .map(|(_, v)| v)
                .sum();
            prop_assert_eq!(total, non_pad);
        }

        #[test]
        fn occurrence_is_monotone(a in proptest::collection::vec(any::<u8>(), 0..100), b in proptest::collection::vec(any::<u8>(), 0..100)) {
            let vocab: Vec<String> = super::super::opcode::table().map(|o| o.mnemonic().to_string()).collect();
            let before = occurrence_vector(&disassemble(&a), &vocab);
            let mut seq = disassemble(&a);
            let tail = disassemble(&b);
            seq.instructions.extend(tail.instructions);
            let after = occurrence_vector(&seq, &vocab);
            for (x, y) in before.iter().zip(&after) {
                prop_assert!(y >= x);
            }
        }
    }
}
