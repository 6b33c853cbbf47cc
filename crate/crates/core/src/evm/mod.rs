// SPDX-License-Identifier: Apache-2.0

//! EVM bytecode disassembly and opcode-sequence featurization.

mod disasm;
pub mod opcode;

pub use disasm::{
    disassemble, ngram_features, normalize_sequence, occurrence_vector, top_k_vocabulary,
    Instruction, NormalizeConfig, OpcodeSequence, DEFAULT_MAX_LEN, DEFAULT_PAD_TOKEN,
};
pub use opcode::{Opcode, TABLE_VERSION};
